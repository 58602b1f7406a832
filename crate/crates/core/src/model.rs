//! Plant and sensor models, the PSD covariance type, standing-assumption
//! validation, and the spectral utilities shared by every other module.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};

/// Relative PSD tolerance used when constructing a [`CovMatrix`]:
/// eigenvalues in `[-tol, 0)` with `tol = PSD_TOL_REL * max(1, max |lambda|)`
/// are clamped to zero, anything below `-tol` is rejected.
pub const PSD_TOL_REL: f64 = 1e-10;

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Extreme eigenvalues `(min, max)` of the symmetric part of `m`.
pub fn symmetric_eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = symmetrize(m).symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &l in eig.eigenvalues.iter() {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    (lo, hi)
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn lambda_min_symmetric(m: &DMatrix<f64>) -> f64 {
    symmetric_eig_range(m).0
}

/// Spectral norm (largest singular value) of an arbitrary rectangular matrix.
///
/// Errors with [`Error::NonFiniteInput`] if any entry is NaN or infinite.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    Ok(sv.iter().fold(0.0_f64, |acc, &s| acc.max(s)))
}

/// Symmetric positive-semidefinite matrix with cached extreme eigenvalues.
///
/// Construction symmetrizes the input (`(Q + Q')/2`), eigendecomposes it,
/// clamps eigenvalues within the PSD tolerance of zero, and rejects matrices
/// with a genuinely negative eigenvalue. All covariance-valued quantities in
/// this crate flow through this type, so symmetry and semidefiniteness hold
/// by construction everywhere downstream.
#[derive(Clone, Debug)]
pub struct CovMatrix {
    mat: DMatrix<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

impl PartialEq for CovMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl CovMatrix {
    /// Validates and wraps `mat` as a PSD covariance.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let sym = symmetrize(&mat);
        let eig = sym.clone().symmetric_eigen();
        let mut raw_min = f64::INFINITY;
        let mut raw_max = f64::NEG_INFINITY;
        let mut scale = 0.0_f64;
        for &l in eig.eigenvalues.iter() {
            raw_min = raw_min.min(l);
            raw_max = raw_max.max(l);
            scale = scale.max(l.abs());
        }
        let tol = PSD_TOL_REL * scale.max(1.0);
        if raw_min < -tol {
            return Err(Error::NotPositiveSemidefinite {
                lambda_min: raw_min,
                tol,
            });
        }
        if raw_min < 0.0 {
            // Clamp the roundoff-negative eigenvalues and rebuild.
            let vals: DVector<f64> = eig.eigenvalues.map(|l| l.max(0.0));
            let rebuilt = &eig.eigenvectors
                * DMatrix::from_diagonal(&vals)
                * eig.eigenvectors.transpose();
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for &l in vals.iter() {
                lo = lo.min(l);
                hi = hi.max(l);
            }
            Ok(Self {
                mat: symmetrize(&rebuilt),
                lambda_min: lo,
                lambda_max: hi,
            })
        } else {
            Ok(Self {
                mat: sym,
                lambda_min: raw_min,
                lambda_max: raw_max,
            })
        }
    }

    /// The `n x n` zero covariance.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    /// `s * I_n`; `s` must be nonnegative (up to the PSD tolerance).
    pub fn scaled_identity(n: usize, s: f64) -> Result<Self> {
        Self::new(DMatrix::identity(n, n) * s)
    }

    /// Diagonal covariance from the given nonnegative diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Borrow the underlying symmetric matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Consume into the underlying symmetric matrix.
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    /// Trace.
    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    /// Smallest eigenvalue (cached at construction; `>= 0`).
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Largest eigenvalue (cached at construction).
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Spectral norm; equals [`CovMatrix::lambda_max`] for a PSD matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.lambda_max
    }

    /// `self + eps * I`, re-validated (`eps` may be negative if the result
    /// stays PSD).
    pub fn add_scaled_identity(&self, eps: f64) -> Result<Self> {
        let n = self.dim();
        Self::new(&self.mat + DMatrix::identity(n, n) * eps)
    }

    /// Spectral-norm distance `||self - other||_2` between two covariances.
    pub fn distance(&self, other: &CovMatrix) -> f64 {
        let (lo, hi) = symmetric_eig_range(&(&self.mat - &other.mat));
        lo.abs().max(hi.abs())
    }
}

/// One sensor: measurement matrix `C` (`p x n`) and measurement-noise
/// covariance (`p x p`).
#[derive(Clone, Debug)]
pub struct SensorModel {
    c: DMatrix<f64>,
    meas_noise: CovMatrix,
}

impl SensorModel {
    /// Wraps a measurement matrix and its noise covariance. Shape coherence
    /// with the plant is checked by [`validate_system`], not here.
    pub fn new(c: DMatrix<f64>, meas_noise: CovMatrix) -> Self {
        Self { c, meas_noise }
    }

    /// Measurement matrix `C`.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Measurement-noise covariance.
    pub fn meas_noise(&self) -> &CovMatrix {
        &self.meas_noise
    }

    /// Number of measurement channels `p`.
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Number of state columns `C` expects.
    pub fn state_dim(&self) -> usize {
        self.c.ncols()
    }
}

/// The plant `x+ = A x + w` together with its sensor bank.
///
/// Derived constants are cached at construction:
/// `lambda_w_minus = lambda_min(Phi_w)`, `lambda_v_minus = min_i
/// lambda_min(Phi_i)`, and `a_norm = ||A||_2`. The standing assumptions
/// (`lambda_w_minus > 0`, `lambda_v_minus > 0`, coherent shapes) are *checked*
/// by [`validate_system`]; construction only enforces what is needed to state
/// the model at all (square finite `A`, matching process-noise dimension).
#[derive(Clone, Debug)]
pub struct SystemModel {
    a: DMatrix<f64>,
    proc_noise: CovMatrix,
    sensors: Vec<SensorModel>,
    lambda_w_minus: f64,
    lambda_v_minus: f64,
    a_norm: f64,
}

impl SystemModel {
    /// Builds a system model and caches its derived constants.
    pub fn new(
        a: DMatrix<f64>,
        proc_noise: CovMatrix,
        sensors: Vec<SensorModel>,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if proc_noise.dim() != a.nrows() {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "proc_noise is {0}x{0}, A is {1}x{1}",
                    proc_noise.dim(),
                    a.nrows()
                ),
            });
        }
        let a_norm = spectral_norm(&a)?;
        let lambda_w_minus = proc_noise.lambda_min();
        let lambda_v_minus = sensors
            .iter()
            .map(|s| s.meas_noise().lambda_min())
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            a,
            proc_noise,
            sensors,
            lambda_w_minus,
            lambda_v_minus,
            a_norm,
        })
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of sensors `M`.
    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    /// System matrix `A`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Process-noise covariance `Phi_w`.
    pub fn proc_noise(&self) -> &CovMatrix {
        &self.proc_noise
    }

    /// The sensor bank, in index order (sensor `i` is `sensors()[i - 1]`).
    pub fn sensors(&self) -> &[SensorModel] {
        &self.sensors
    }

    /// Sensor by 1-based index.
    pub fn sensor(&self, index: usize) -> Result<&SensorModel> {
        if index == 0 || index > self.sensors.len() {
            return Err(Error::SensorIndexOutOfRange {
                index,
                num_sensors: self.sensors.len(),
            });
        }
        Ok(&self.sensors[index - 1])
    }

    /// `lambda_min(Phi_w)`.
    pub fn lambda_w_minus(&self) -> f64 {
        self.lambda_w_minus
    }

    /// `min_i lambda_min(Phi_i)` over the sensor bank (`+inf` if empty).
    pub fn lambda_v_minus(&self) -> f64 {
        self.lambda_v_minus
    }

    /// Spectral norm of `A`.
    pub fn a_norm(&self) -> f64 {
        self.a_norm
    }
}

/// A single failed standing assumption, naming the invariant and the
/// offending value.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// The invariant that failed, e.g. `"lambda_w_minus > 0"`.
    pub invariant: &'static str,
    /// Human-readable description of the offending value.
    pub detail: String,
}

/// Outcome of [`validate_system`]: empty means all assumptions hold.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    /// All detected violations, in a deterministic order.
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// True when no standing assumption is violated.
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the standing assumptions the algorithms in this crate rely on:
/// positive-definite process noise, at least one sensor, positive-definite
/// measurement noise for every sensor, and sensor shapes coherent with the
/// state dimension. Reports *all* violations rather than failing on the
/// first; the order of the report is deterministic.
pub fn validate_system(model: &SystemModel) -> ValidationReport {
    let mut violations = Vec::new();
    let n = model.n();

    if !(model.lambda_w_minus() > 0.0) {
        violations.push(Violation {
            invariant: "lambda_w_minus > 0",
            detail: format!("lambda_min(proc_noise) = {:e}", model.lambda_w_minus()),
        });
    }
    if model.num_sensors() == 0 {
        violations.push(Violation {
            invariant: "M >= 1",
            detail: String::from("sensor bank is empty"),
        });
    }
    for (k, s) in model.sensors().iter().enumerate() {
        let i = k + 1;
        if s.state_dim() != n {
            violations.push(Violation {
                invariant: "C columns = n",
                detail: format!(
                    "sensor {}: C is {}x{}, state dimension is {}",
                    i,
                    s.output_dim(),
                    s.state_dim(),
                    n
                ),
            });
        }
        if s.output_dim() == 0 {
            violations.push(Violation {
                invariant: "C rows >= 1",
                detail: format!("sensor {}: C has no rows", i),
            });
        }
        if s.meas_noise().dim() != s.output_dim() {
            violations.push(Violation {
                invariant: "meas_noise dimension = C rows",
                detail: format!(
                    "sensor {}: meas_noise is {}x{}, C has {} rows",
                    i,
                    s.meas_noise().dim(),
                    s.meas_noise().dim(),
                    s.output_dim()
                ),
            });
        }
        if !(s.meas_noise().lambda_min() > 0.0) {
            violations.push(Violation {
                invariant: "lambda_v_minus > 0",
                detail: format!(
                    "sensor {}: lambda_min(meas_noise) = {:e}",
                    i,
                    s.meas_noise().lambda_min()
                ),
            });
        }
        if s.c().iter().any(|x| !x.is_finite()) {
            violations.push(Violation {
                invariant: "C finite",
                detail: format!("sensor {}: C contains a non-finite entry", i),
            });
        }
    }
    ValidationReport { violations }
}
