//! Fixed points and N-cycles of periodic schedules, with contraction-based
//! stability certificates.
//!
//! A period-`N` word `sigma` induces the composite map
//! `Q -> rho_{sigma(N-1)}( ... rho_{sigma(0)}(Q) ... )`. For words that keep
//! the covariance bounded this map has an attracting fixed point `phi_0`;
//! unrolling one period from `phi_0` yields the N-cycle whose average trace
//! is the schedule's asymptotic average cost.

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::model::{symmetrize, CovMatrix, SystemModel};
use crate::riccati::{closed_loop_matrix, riccati_map};
use crate::schedule::PeriodicWord;

/// Configuration for [`fixed_point`] and [`n_cycle`].
#[derive(Clone, Debug)]
pub struct FixedPointConfig {
    /// Relative tolerance: iteration stops when the period-map residual is
    /// at most `fp_tol * (1 + ||phi||)`.
    pub fp_tol: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Starting covariance; defaults to the process noise `Phi_w` (a lower
    /// bound of the map's range, giving monotone ascent to the fixed point).
    pub init: Option<CovMatrix>,
    /// Optional eigenvalue cap; iterates exceeding it abort early with
    /// [`Error::NoConvergence`].
    pub divergence_cap: Option<f64>,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            fp_tol: 1e-10,
            max_iters: 10_000,
            init: None,
            divergence_cap: None,
        }
    }
}

/// A converged fixed point of a period map.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    /// The fixed covariance `phi_0` (one full period maps it to itself
    /// within tolerance).
    pub point: CovMatrix,
    /// Period-map applications performed.
    pub iterations: usize,
    /// Final residual `||Sigma_N(phi) - phi||`.
    pub residual: f64,
}

fn is_divergence(err: &Error) -> bool {
    // Covariances that blow up manifest as overflow, as catastrophic
    // cancellation breaking semidefiniteness, or as an innovation matrix
    // whose conditioning explodes. For a validated model none of these can
    // arise on a bounded trajectory.
    matches!(
        err,
        Error::NonFiniteInput
            | Error::NotPositiveSemidefinite { .. }
            | Error::IllConditionedInnovation { .. }
    )
}

/// Applies one full period of `word` to `phi`.
fn period_map(model: &SystemModel, word: &PeriodicWord, phi: &CovMatrix) -> Result<CovMatrix> {
    let mut cur = phi.clone();
    for &i in word.word() {
        cur = riccati_map(model, i, &cur)?;
    }
    Ok(cur)
}

/// Iterates the period map of `word` to a fixed point.
///
/// Returns [`Error::NoConvergence`] when the tolerance is not met within
/// `max_iters`, when an iterate exceeds the divergence cap, or when the
/// trajectory degenerates numerically (a divergent word such as an
/// undetectable-sensor loop ends here).
pub fn fixed_point(
    model: &SystemModel,
    word: &PeriodicWord,
    config: &FixedPointConfig,
) -> Result<FixedPoint> {
    if !(config.fp_tol > 0.0) {
        return Err(Error::InvalidConfig {
            reason: alloc::format!("fp_tol must be positive, got {:e}", config.fp_tol),
        });
    }
    if config.max_iters == 0 {
        return Err(Error::InvalidConfig {
            reason: alloc::string::String::from("max_iters must be >= 1"),
        });
    }
    let mut phi = match &config.init {
        Some(p) => p.clone(),
        None => model.proc_noise().clone(),
    };
    let mut history: Vec<f64> = Vec::new();
    for iter in 1..=config.max_iters {
        let next = match period_map(model, word, &phi) {
            Ok(c) => c,
            Err(e) if is_divergence(&e) => {
                let last = history.last().copied().unwrap_or(f64::INFINITY);
                return Err(Error::NoConvergence {
                    iterations: iter,
                    last_residual: last,
                    residual_history: history,
                });
            }
            Err(e) => return Err(e),
        };
        let residual = next.distance(&phi);
        history.push(residual);
        if residual <= config.fp_tol * (1.0 + phi.spectral_norm()) {
            return Ok(FixedPoint {
                point: next,
                iterations: iter,
                residual,
            });
        }
        if let Some(cap) = config.divergence_cap {
            if next.lambda_max() > cap {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    last_residual: residual,
                    residual_history: history,
                });
            }
        }
        phi = next;
    }
    let last = history.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::NoConvergence {
        iterations: config.max_iters,
        last_residual: last,
        residual_history: history,
    })
}

/// The periodic orbit of a period-`N` word.
#[derive(Clone, Debug)]
pub struct NCycle {
    /// The word that generates the cycle.
    pub word: PeriodicWord,
    /// `phi_0, ..., phi_{N-1}` with `phi_0` the period-map fixed point and
    /// `phi_{t+1} = rho_{word[t]}(phi_t)`.
    pub points: Vec<CovMatrix>,
    /// `(1/N) * sum_{t=1}^{N} trace(Sigma_t(phi_0))`: the asymptotic
    /// average-per-stage cost of the schedule.
    pub cycle_avg_cost: f64,
    /// `||Sigma_N(phi_0) - phi_0||`, the achieved cycle closure.
    pub closure_residual: f64,
    /// Iterations the underlying fixed-point solve took.
    pub iterations: usize,
}

/// Solves for the fixed point of `word`'s period map and unrolls one period
/// into the N-cycle.
pub fn n_cycle(model: &SystemModel, word: &PeriodicWord, config: &FixedPointConfig) -> Result<NCycle> {
    let fp = fixed_point(model, word, config)?;
    let n = word.period();
    let mut points = Vec::with_capacity(n);
    points.push(fp.point.clone());
    let mut cur = fp.point.clone();
    let mut cost = 0.0;
    for (t, &i) in word.word().iter().enumerate() {
        cur = riccati_map(model, i, &cur)?;
        cost += cur.trace();
        if t + 1 < n {
            points.push(cur.clone());
        }
    }
    let closure_residual = cur.distance(&fp.point);
    let tol = config.fp_tol * (1.0 + fp.point.spectral_norm());
    if closure_residual > tol {
        return Err(Error::CycleClosure {
            residual: closure_residual,
            tol,
        });
    }
    Ok(NCycle {
        word: word.clone(),
        points,
        cycle_avg_cost: cost / n as f64,
        closure_residual,
        iterations: fp.iterations,
    })
}

/// Linearized-stability certificate of an N-cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityCertificate {
    /// Power-iteration estimate of the spectral radius of the cycle's
    /// linearized period map `D -> G D G'` with `G = F_{N-1} ... F_0`.
    pub rho_est: f64,
    /// True when `rho_est < 1` (locally exponentially attracting cycle).
    pub stable: bool,
    /// Power-iteration steps used.
    pub iterations: usize,
}

/// Estimates the contraction factor of the cycle's linearized period map by
/// power iteration on `D -> G D G'` (50 steps, relative tolerance `1e-8`),
/// starting from the identity direction.
pub fn stability_certificate(model: &SystemModel, cycle: &NCycle) -> Result<StabilityCertificate> {
    let n = model.n();
    let mut factors = Vec::with_capacity(cycle.points.len());
    for (t, &i) in cycle.word.word().iter().enumerate() {
        factors.push(closed_loop_matrix(model, i, &cycle.points[t])?);
    }
    let mut d = DMatrix::<f64>::identity(n, n);
    d /= d.norm();
    let mut lam = 0.0_f64;
    let mut lam_prev = f64::INFINITY;
    let mut iterations = 0;
    for step in 1..=50 {
        let mut nd = d.clone();
        for f in &factors {
            nd = f * nd * f.transpose();
        }
        nd = symmetrize(&nd);
        lam = nd.norm();
        iterations = step;
        if lam == 0.0 {
            break;
        }
        nd /= lam;
        d = nd;
        if (lam - lam_prev).abs() <= 1e-8 * lam.max(1.0) {
            break;
        }
        lam_prev = lam;
    }
    Ok(StabilityCertificate {
        rho_est: lam,
        stable: lam < 1.0,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SensorModel;
    use crate::schedule::example1_system;
    use approx::assert_relative_eq;

    const PHI_STAR: f64 = 4.23606797749979; // 2 + sqrt(5)

    fn benchmark() -> SystemModel {
        example1_system(2.0, 1.0, 1.0).unwrap()
    }

    fn word(w: &[usize]) -> PeriodicWord {
        PeriodicWord::new(w.to_vec()).unwrap()
    }

    #[test]
    fn sensor_one_fixed_point_is_equilibrium() {
        let model = benchmark();
        let fp = fixed_point(&model, &word(&[1]), &FixedPointConfig::default()).unwrap();
        assert!((fp.point.matrix()[(0, 0)] - PHI_STAR).abs() < 1e-9);
        assert!((fp.point.matrix()[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(fp.point.matrix()[(0, 1)].abs() < 1e-12);
        // Converges quickly from Phi_w (frozen from an independent run of
        // the scalar recursion: 14 iterations at fp_tol = 1e-10).
        assert_eq!(fp.iterations, 14);
        assert!(fp.residual <= 1e-10 * (1.0 + fp.point.spectral_norm()));
    }

    #[test]
    fn fixed_point_honors_exact_initial_guess() {
        let model = benchmark();
        let exact = CovMatrix::from_diagonal(&[PHI_STAR, 1.0]).unwrap();
        let cfg = FixedPointConfig {
            init: Some(exact),
            ..FixedPointConfig::default()
        };
        let fp = fixed_point(&model, &word(&[1]), &cfg).unwrap();
        assert_eq!(fp.iterations, 1);
    }

    #[test]
    fn undetectable_word_reports_no_convergence() {
        let model = benchmark();
        let err = fixed_point(&model, &word(&[2]), &FixedPointConfig::default()).unwrap_err();
        match &err {
            Error::NoConvergence {
                residual_history, ..
            } => {
                // Residuals grow geometrically before overflow.
                assert!(residual_history.len() > 2);
                assert!(residual_history[1] > residual_history[0]);
            }
            other => panic!("unexpected error: {other:?}"),
        }
        let msg = alloc::format!("{err}");
        assert!(msg.contains(
            "no convergence: schedule may be infeasible or period map not contractive"
        ));
    }

    #[test]
    fn divergence_cap_fails_fast() {
        let model = benchmark();
        let cfg = FixedPointConfig {
            divergence_cap: Some(1e8),
            ..FixedPointConfig::default()
        };
        match fixed_point(&model, &word(&[2]), &cfg).unwrap_err() {
            Error::NoConvergence { iterations, .. } => assert!(iterations < 30),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn two_cycle_matches_closed_form() {
        // Word [1,2]: the unstable component alternates q -> 1 + 4q/(q+1)
        // (sensor 1) and q -> 4q + 1 (sensor 2). The phase-0 point solves
        // 2B^2 - 9B - 3 = 0 after one sensor-1 step; cycle average is
        // (5u + 1)/2 + 1 with u = (9 + sqrt(105))/4.
        let model = benchmark();
        let cyc = n_cycle(&model, &word(&[1, 2]), &FixedPointConfig::default()).unwrap();
        assert_eq!(cyc.points.len(), 2);
        assert_relative_eq!(cyc.cycle_avg_cost, 13.529344228724739, epsilon = 1e-9);
        let u = (9.0 + 105.0_f64.sqrt()) / 4.0;
        assert_relative_eq!(cyc.points[0].matrix()[(0, 0)], 4.0 * u + 1.0, epsilon = 1e-8);
        assert_relative_eq!(cyc.points[1].matrix()[(0, 0)], u, epsilon = 1e-8);
        assert!(cyc.closure_residual <= 1e-10 * (1.0 + cyc.points[0].spectral_norm()));
        // The orbit points are consistent: rho_1(phi_0) = phi_1.
        let step = riccati_map(&model, 1, &cyc.points[0]).unwrap();
        assert!(step.distance(&cyc.points[1]) < 1e-12);
    }

    #[test]
    fn one_cycle_cost_is_equilibrium_trace() {
        let model = benchmark();
        let cyc = n_cycle(&model, &word(&[1]), &FixedPointConfig::default()).unwrap();
        assert_relative_eq!(cyc.cycle_avg_cost, PHI_STAR + 1.0, epsilon = 1e-9);
        assert_eq!(cyc.points.len(), 1);
    }

    #[test]
    fn certificate_matches_closed_loop_contraction() {
        // At the sensor-1 equilibrium F = lambda - K = (3 - sqrt(5))/2, and
        // the linearized period map has spectral radius F^2 = (7 - 3 sqrt 5)/2.
        let model = benchmark();
        let cyc = n_cycle(&model, &word(&[1]), &FixedPointConfig::default()).unwrap();
        let cert = stability_certificate(&model, &cyc).unwrap();
        assert!(cert.stable);
        assert_relative_eq!(cert.rho_est, 0.14589803375031546, epsilon = 1e-9);
    }

    #[test]
    fn certificate_for_static_plant_is_zero() {
        let model = SystemModel::new(
            DMatrix::from_row_slice(1, 1, &[0.0]),
            CovMatrix::scaled_identity(1, 1.0).unwrap(),
            alloc::vec![SensorModel::new(
                DMatrix::from_row_slice(1, 1, &[1.0]),
                CovMatrix::scaled_identity(1, 1.0).unwrap(),
            )],
        )
        .unwrap();
        let cyc = n_cycle(&model, &word(&[1]), &FixedPointConfig::default()).unwrap();
        let cert = stability_certificate(&model, &cyc).unwrap();
        assert_eq!(cert.rho_est, 0.0);
        assert!(cert.stable);
    }
}
