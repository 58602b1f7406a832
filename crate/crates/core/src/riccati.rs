//! Sensor-indexed Riccati recursion: the covariance map, Kalman gains,
//! trajectory propagation, directional derivatives along a trajectory, and
//! the contraction/trace bounds they satisfy.
//!
//! For sensor `i` the one-step prediction-error covariance map is
//!
//! ```text
//! rho_i(Q) = Phi_w + A Q A' - A Q C_i' (C_i Q C_i' + Phi_i)^-1 C_i Q A'
//! ```
//!
//! Key structural facts used throughout the crate: `rho_i` is monotone and
//! concave on the PSD cone, `rho_i(Q) >= Phi_w` always, and its directional
//! derivative at `Q` in direction `D` is `F D F'` with the closed-loop matrix
//! `F = A - K C_i` evaluated at `Q`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Dyn};
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::model::{symmetric_eig_range, symmetrize, CovMatrix, SystemModel};

/// Condition-number threshold above which an innovation covariance
/// `C Q C' + Phi_i` is rejected as numerically singular.
pub const INNOVATION_COND_MAX: f64 = 1e14;

/// Absolute slack added to the trace bound check in [`prop1_trace_bound`].
pub const TRACE_BOUND_ABS_TOL: f64 = 1e-9;

fn check_state_dim(model: &SystemModel, q: &CovMatrix) -> Result<()> {
    if q.dim() != model.n() {
        return Err(Error::DimensionMismatch {
            what: format!(
                "covariance is {}x{}, state dimension is {}",
                q.dim(),
                q.dim(),
                model.n()
            ),
        });
    }
    Ok(())
}

/// Innovation covariance `S = C Q C' + Phi_i`, validated and factorized.
fn innovation(
    model: &SystemModel,
    index: usize,
    q: &CovMatrix,
) -> Result<nalgebra::Cholesky<f64, Dyn>> {
    let sensor = model.sensor(index)?;
    check_state_dim(model, q)?;
    if sensor.state_dim() != model.n() {
        return Err(Error::DimensionMismatch {
            what: format!(
                "sensor {} has C with {} columns, state dimension is {}",
                index,
                sensor.state_dim(),
                model.n()
            ),
        });
    }
    let c = sensor.c();
    let s = symmetrize(&(c * q.matrix() * c.transpose() + sensor.meas_noise().matrix()));
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (lo, hi) = symmetric_eig_range(&s);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(lo > 0.0) || condition > INNOVATION_COND_MAX {
        return Err(Error::IllConditionedInnovation { condition });
    }
    s.cholesky()
        .ok_or(Error::IllConditionedInnovation { condition })
}

/// One Riccati step: the prediction-error covariance after selecting sensor
/// `index` (1-based) at a step whose incoming covariance is `q`.
pub fn riccati_map(model: &SystemModel, index: usize, q: &CovMatrix) -> Result<CovMatrix> {
    let chol = innovation(model, index, q)?;
    let sensor = model.sensor(index)?;
    let a = model.a();
    // W = C Q A'  (p x n); correction term is W' S^-1 W.
    let w = sensor.c() * q.matrix() * a.transpose();
    let z = chol.solve(&w);
    let next = model.proc_noise().matrix() + a * q.matrix() * a.transpose() - w.transpose() * z;
    CovMatrix::new(next)
}

/// Kalman (predictor) gain `K = A Q C' (C Q C' + Phi_i)^-1` at covariance `q`.
pub fn kalman_gain(model: &SystemModel, index: usize, q: &CovMatrix) -> Result<DMatrix<f64>> {
    let chol = innovation(model, index, q)?;
    let sensor = model.sensor(index)?;
    let w = sensor.c() * q.matrix() * model.a().transpose();
    Ok(chol.solve(&w).transpose())
}

/// Closed-loop matrix `F = A - K C_i` at covariance `q`; the directional
/// derivative of `rho_i` at `q` is `D -> F D F'`.
pub fn closed_loop_matrix(
    model: &SystemModel,
    index: usize,
    q: &CovMatrix,
) -> Result<DMatrix<f64>> {
    let k = kalman_gain(model, index, q)?;
    Ok(model.a() - k * model.sensor(index)?.c())
}

/// Filtered (posterior) covariance `Q - Q C' (C Q C' + Phi_i)^-1 C Q`.
///
/// Satisfies the identity `rho_i(Q) = Phi_w + A filt_i(Q) A'`.
pub fn filtered_covariance(model: &SystemModel, index: usize, q: &CovMatrix) -> Result<CovMatrix> {
    let chol = innovation(model, index, q)?;
    let sensor = model.sensor(index)?;
    let u = sensor.c() * q.matrix(); // p x n
    let z = chol.solve(&u);
    CovMatrix::new(q.matrix() - u.transpose() * z)
}

/// A propagated covariance trajectory `Sigma_1, ..., Sigma_T` from `init`
/// under the sensor indices `indices` (so `covs[t-1] = Sigma_t`).
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// The initial covariance `Sigma_0`.
    pub init: CovMatrix,
    /// The sensor index used at each step (`indices[t]` advances
    /// `Sigma_t` to `Sigma_{t+1}`).
    pub indices: Vec<usize>,
    /// `Sigma_1, ..., Sigma_T`.
    pub covs: Vec<CovMatrix>,
    /// `trace(Sigma_t)` for `t = 1, ..., T`.
    pub traces: Vec<f64>,
}

impl Trajectory {
    /// Number of propagated steps `T`.
    pub fn horizon(&self) -> usize {
        self.covs.len()
    }

    /// The final covariance (`Sigma_T`, or `Sigma_0` when `T = 0`).
    pub fn last(&self) -> &CovMatrix {
        self.covs.last().unwrap_or(&self.init)
    }

    /// Running totals `J_N = sum_{t=1}^{N} trace(Sigma_t)` for `N = 1..=T`.
    pub fn cumulative_traces(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.traces.len());
        let mut acc = 0.0;
        for &tr in &self.traces {
            acc += tr;
            out.push(acc);
        }
        out
    }
}

/// Propagates `phi` through the Riccati maps selected by `indices`.
pub fn propagate(model: &SystemModel, phi: &CovMatrix, indices: &[usize]) -> Result<Trajectory> {
    check_state_dim(model, phi)?;
    let mut covs = Vec::with_capacity(indices.len());
    let mut traces = Vec::with_capacity(indices.len());
    let mut cur = phi.clone();
    for &i in indices {
        cur = riccati_map(model, i, &cur)?;
        traces.push(cur.trace());
        covs.push(cur.clone());
    }
    Ok(Trajectory {
        init: phi.clone(),
        indices: indices.to_vec(),
        covs,
        traces,
    })
}

/// Directional derivatives `g_1, ..., g_T` of the trajectory map at `phi`
/// in direction `direction`, propagated by `g_{t+1} = F_t g_t F_t'` with
/// `F_t = A - K_t C_{indices[t]}` evaluated along the nominal trajectory.
///
/// `direction` must be symmetric (it is symmetrized defensively) but need
/// not be PSD.
pub fn directional_derivative(
    model: &SystemModel,
    phi: &CovMatrix,
    indices: &[usize],
    direction: &DMatrix<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    check_state_dim(model, phi)?;
    if direction.nrows() != model.n() || direction.ncols() != model.n() {
        return Err(Error::DimensionMismatch {
            what: format!(
                "direction is {}x{}, state dimension is {}",
                direction.nrows(),
                direction.ncols(),
                model.n()
            ),
        });
    }
    if direction.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut g = symmetrize(direction);
    let mut cur = phi.clone();
    let mut out = Vec::with_capacity(indices.len());
    for &i in indices {
        let f = closed_loop_matrix(model, i, &cur)?;
        g = symmetrize(&(&f * g * f.transpose()));
        out.push(g.clone());
        cur = riccati_map(model, i, &cur)?;
    }
    Ok(out)
}

/// Contraction constants attached to a trajectory bound `beta`.
///
/// For any trajectory staying below `beta * I`,
/// `alpha = lambda_w_minus / (||A||^2 beta^2 + lambda_w_minus * beta)` and
/// `eta = 1 / (1 + alpha * lambda_w_minus) < 1`; directional-derivative
/// traces then decay like `trace(g_t) <= n * beta * eta^t / lambda_w_minus`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    /// The trajectory bound the constants are valid for.
    pub beta: f64,
    /// Uniform-observability surrogate `alpha > 0`.
    pub alpha: f64,
    /// Contraction rate `eta` in `(0, 1)`.
    pub eta: f64,
}

/// Computes the contraction constants for trajectory bound `beta`.
///
/// Requires `beta > 0` (finite) and a positive-definite process noise.
pub fn prop1_constants(model: &SystemModel, beta: f64) -> Result<BoundConstants> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::BetaNotPositive { beta });
    }
    let lw = model.lambda_w_minus();
    if !(lw > 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!(
                "contraction constants require lambda_w_minus > 0, got {:e}",
                lw
            ),
        });
    }
    let a2 = model.a_norm() * model.a_norm();
    let alpha = lw / (a2 * beta * beta + lw * beta);
    let eta = 1.0 / (1.0 + alpha * lw);
    Ok(BoundConstants { beta, alpha, eta })
}

/// One row of a [`TraceBoundReport`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceBoundStep {
    /// Step index `t >= 1`.
    pub t: usize,
    /// `trace(g_t)` for the identity-direction derivative.
    pub trace_g: f64,
    /// The theoretical envelope `n * beta * eta^t / lambda_w_minus`.
    pub bound: f64,
    /// `bound + TRACE_BOUND_ABS_TOL - trace_g`; nonnegative when the bound
    /// holds.
    pub margin: f64,
}

/// Result of checking the derivative trace bound along one trajectory.
#[derive(Clone, Debug)]
pub struct TraceBoundReport {
    /// Constants used for the envelope.
    pub constants: BoundConstants,
    /// Per-step traces, envelopes, and margins.
    pub steps: Vec<TraceBoundStep>,
    /// True when every step margin is nonnegative.
    pub all_hold: bool,
}

/// Propagates the identity-direction derivative along the trajectory from
/// `phi` under `indices` and checks `trace(g_t)` against the decay envelope
/// for trajectory bound `beta`.
///
/// Errors with [`Error::BetaNotTrajectoryBound`] if `phi` or any propagated
/// covariance exceeds `beta * I`.
pub fn prop1_trace_bound(
    model: &SystemModel,
    phi: &CovMatrix,
    indices: &[usize],
    beta: f64,
) -> Result<TraceBoundReport> {
    let constants = prop1_constants(model, beta)?;
    let traj = propagate(model, phi, indices)?;
    if phi.lambda_max() > beta {
        return Err(Error::BetaNotTrajectoryBound {
            t: 0,
            lambda_max: phi.lambda_max(),
            beta,
        });
    }
    for (k, cov) in traj.covs.iter().enumerate() {
        if cov.lambda_max() > beta {
            return Err(Error::BetaNotTrajectoryBound {
                t: k + 1,
                lambda_max: cov.lambda_max(),
                beta,
            });
        }
    }
    let n = model.n() as f64;
    let lw = model.lambda_w_minus();
    let identity = DMatrix::identity(model.n(), model.n());
    let gs = directional_derivative(model, phi, indices, &identity)?;
    let mut steps = Vec::with_capacity(gs.len());
    let mut all_hold = true;
    let mut envelope = n * beta / lw;
    for (k, g) in gs.iter().enumerate() {
        envelope *= constants.eta;
        let trace_g = g.trace();
        let margin = envelope + TRACE_BOUND_ABS_TOL - trace_g;
        if margin < 0.0 {
            all_hold = false;
        }
        steps.push(TraceBoundStep {
            t: k + 1,
            trace_g,
            bound: envelope,
            margin,
        });
    }
    Ok(TraceBoundReport {
        constants,
        steps,
        all_hold,
    })
}
