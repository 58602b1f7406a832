//! Error type shared across the library.

use alloc::string::String;
use alloc::vec::Vec;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = core::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Numerical-degeneracy variants ([`Error::NonFiniteInput`],
/// [`Error::NotPositiveSemidefinite`], [`Error::IllConditionedInnovation`])
/// can arise either from bad inputs or from a divergent trajectory overflowing
/// `f64`; callers that iterate (fixed-point solvers, searches) map them to
/// infeasibility of the candidate rather than aborting.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    /// A matrix or scalar input contained NaN or infinity.
    #[error("non-finite input")]
    NonFiniteInput,

    /// A square matrix was required.
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    /// A non-empty matrix was required.
    #[error("matrix must be non-empty")]
    EmptyMatrix,

    /// Eigenvalue below the PSD tolerance at construction of a covariance.
    #[error("matrix is not positive semidefinite: lambda_min = {lambda_min:e} < -{tol:e}")]
    NotPositiveSemidefinite { lambda_min: f64, tol: f64 },

    /// 1-based sensor index outside `1..=M`.
    #[error("sensor index {index} out of range 1..={num_sensors}")]
    SensorIndexOutOfRange { index: usize, num_sensors: usize },

    /// Schedules and periodic words must contain at least one index.
    #[error("schedule must be non-empty")]
    EmptySchedule,

    /// Incompatible shapes between model pieces or operands.
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },

    /// A finite schedule cannot supply the requested number of steps.
    #[error("finite schedule provides {available} steps, {requested} requested")]
    HorizonExceedsSchedule { requested: usize, available: usize },

    /// Innovation covariance `C Q C' + Phi_i` was singular or nearly so.
    #[error("innovation covariance ill-conditioned (condition number {condition:e})")]
    IllConditionedInnovation { condition: f64 },

    /// A contraction-bound parameter `beta` must be strictly positive.
    #[error("beta must be strictly positive, got {beta}")]
    BetaNotPositive { beta: f64 },

    /// The supplied `beta` does not dominate the trajectory it should bound.
    #[error("beta is not a valid trajectory bound: lambda_max(Sigma_{t}) = {lambda_max:e} > beta = {beta:e}")]
    BetaNotTrajectoryBound { t: usize, lambda_max: f64, beta: f64 },

    /// A configuration value violated its documented precondition.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    /// Fixed-point iteration did not meet its tolerance.
    #[error("no convergence: schedule may be infeasible or period map not contractive at this tolerance ({iterations} iterations, last residual {last_residual:e})")]
    NoConvergence {
        iterations: usize,
        last_residual: f64,
        /// Residual after each completed iteration, for diagnosis.
        residual_history: Vec<f64>,
    },

    /// Unrolling a converged fixed point failed to close the cycle.
    #[error("cycle closure residual {residual:e} exceeds tolerance {tol:e}")]
    CycleClosure { residual: f64, tol: f64 },

    /// An enumeration or sampling budget would be exceeded.
    #[error("budget exceeded: {what} requires {required}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u64,
        budget: u64,
    },

    /// A generated schedule's construction horizon exceeded its step budget.
    #[error("horizon budget exceeded: construction covers {horizon} steps, budget is {budget}")]
    HorizonBudgetExceeded { horizon: u64, budget: u64 },

    /// A schedule failed its feasibility screen (covariance passed the cap).
    #[error("feasibility check failed: covariance exceeded the bound cap at step {t_fail}")]
    FeasibilityFailed { t_fail: usize },

    /// No return of the trajectory into the recurrence ball was observed.
    #[error("recurrence not detected; increase T_sim or r (scanned {scanned} steps, radius {radius:e})")]
    RecurrenceNotDetected { scanned: usize, radius: f64 },

    /// The periodic-approximation grid was exhausted above the target gap.
    #[error("approximation gap {best_gap:e} exceeds delta {delta:e} after grid exhaustion")]
    ApproxGapExceeded { best_gap: f64, delta: f64 },

    /// An exhaustive search found no convergent candidate at all.
    #[error("no feasible periodic schedule found up to period {max_period}")]
    NoFeasibleSchedule { max_period: usize },
}
