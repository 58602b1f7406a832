//! Sensor scheduling for linear Gaussian state estimation.
//!
//! A discrete-time linear plant is observed through one of `M` sensors per
//! time step. Selecting sensor `i` at time `t` advances the one-step
//! prediction-error covariance through the sensor-indexed Riccati map
//!
//! ```text
//! rho_i(Q) = Phi_w + A Q A' - A Q C_i' (C_i Q C_i' + Phi_i)^-1 C_i Q A'
//! ```
//!
//! and the quality of an infinite sensor schedule is the long-run average of
//! the covariance traces it produces. This crate provides:
//!
//! - the covariance/plant/sensor types and their standing assumptions
//!   ([`model`]),
//! - the Riccati recursion, Kalman gains, directional derivatives along a
//!   trajectory, and contraction/trace bounds ([`riccati`]),
//! - schedule representations (finite, periodic, generated) and cost
//!   functionals including windowed long-run average estimates ([`schedule`]),
//! - fixed points and N-cycles of periodic schedules with stability
//!   certificates ([`periodic`]),
//! - exhaustive and greedy schedule synthesis plus a constructive periodic
//!   approximation of an arbitrary feasible schedule ([`search`]),
//! - a randomized numerical verification harness that certifies the theory
//!   the other modules rely on ([`verify`]).
//!
//! The crate is `no_std` (with `alloc`); all floating-point work is `f64`.
//! Sensor indices are 1-based everywhere: a schedule is a sequence over
//! `{1, ..., M}`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
// `!(x > 0.0)` and friends are used deliberately throughout: unlike the
// suggested rewrite, the negated comparison also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod model;
pub mod periodic;
pub mod riccati;
pub mod schedule;
pub mod search;
pub mod verify;

pub use error::{Error, Result};
pub use model::{validate_system, CovMatrix, SensorModel, SystemModel, ValidationReport, Violation};
pub use periodic::{fixed_point, n_cycle, stability_certificate, FixedPoint, FixedPointConfig, NCycle, StabilityCertificate};
pub use riccati::{
    directional_derivative, filtered_covariance, kalman_gain, propagate, prop1_constants,
    prop1_trace_bound, riccati_map, BoundConstants, TraceBoundReport, Trajectory,
};
pub use schedule::{
    avg_cost, example1_phistar, example1_schedule, example1_schedule_with_budget, example1_system,
    feasibility_check, limsup_cost, total_cost, CostSeries, Example1Construction, Example1Interval,
    Feasibility, FeasibilityConfig, GeneratedRule, LimsupConfig, PeriodicWord, Schedule,
};
pub use search::{
    brute_force_oracle, enumerate_periodic, greedy_schedule, universal_approx_construct,
    ApproxConfig, ApproxReport, BruteForceResult, GreedyResult, SearchConfig, SearchResult,
};
pub use verify::{
    check_corollary3, check_example1, check_lemma1, check_prop1, check_theorem1, default_suite,
    monte_carlo_consistency, random_psd, random_system, CheckReport, RandomSystemConfig,
};
