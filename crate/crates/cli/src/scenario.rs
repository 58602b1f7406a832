//! Scenario-file schema and conversion into library types.
//!
//! A scenario is a single strict JSON document: unknown keys are rejected
//! with the offending key named, matrices are row-major nested arrays, and
//! the declared `n`/`M` are cross-checked against every matrix shape.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use sensched_core::{
    example1_schedule, validate_system, CovMatrix, FixedPointConfig, LimsupConfig, Schedule,
    SensorModel, SystemModel,
};

use crate::error::CliError;

/// Top-level scenario document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// State dimension.
    pub n: usize,
    /// Number of sensors.
    #[serde(rename = "M")]
    pub m: usize,
    /// System matrix, row-major `n x n`.
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    /// Process noise covariance, row-major `n x n`.
    pub proc_noise: Vec<Vec<f64>>,
    /// Sensor bank, one entry per sensor, ordered by 1-based index.
    pub sensors: Vec<SensorSpec>,
    /// Initial covariance `phi_0` (`x(0) ~ N(0, phi_0)`), row-major `n x n`.
    pub phi0: Vec<Vec<f64>>,
    /// Which sensor runs at each step.
    pub schedule: ScheduleSpec,
    /// Optional tolerance/horizon overrides.
    #[serde(default)]
    pub config: RunConfig,
}

/// One sensor: output map and measurement noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    /// Output matrix, row-major `p x n`.
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    /// Measurement noise covariance, row-major `p x p`.
    pub meas_noise: Vec<Vec<f64>>,
}

/// Schedule selector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScheduleSpec {
    /// An explicit finite index list.
    Finite(FiniteSpec),
    /// Infinite repetition of a word.
    Periodic(PeriodicSpec),
    /// A named generated rule.
    Generated(GeneratedSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSpec {
    /// 1-based sensor indices, one per step.
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicSpec {
    /// The repeated word, 1-based sensor indices.
    pub word: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedSpec {
    pub rule: RuleSpec,
}

/// Built-in generated rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum RuleSpec {
    /// The alternating-burst construction on the two-sensor benchmark.
    Example1(Example1Rule),
    /// A seeded hash-based rule, uniform over the sensor bank.
    PseudoRandom(PseudoRandomRule),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Rule {
    /// Unstable mode `lambda` (integer, per the construction's recursion).
    pub lambda: u64,
    /// Number of stages to tabulate.
    pub k_max: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoRandomRule {
    pub seed: u64,
    pub num_sensors: usize,
}

/// Optional overrides for tolerances and estimator horizons. Every field
/// defaults to the library default when omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Divergence cap for fixed-point solves and feasibility screens.
    pub bound_cap: Option<f64>,
    /// Fixed-point relative tolerance.
    pub fp_tol: Option<f64>,
    /// Fixed-point iteration cap.
    pub max_iters: Option<usize>,
    /// Long-run estimator horizon `T`.
    pub estimator_horizon: Option<usize>,
    /// Long-run estimator window `W`.
    pub window: Option<usize>,
    /// Long-run estimator burn-in `T0`.
    pub burn_in: Option<usize>,
    /// Long-run estimator convergence tolerance.
    pub conv_tol: Option<f64>,
}

impl RunConfig {
    pub fn limsup(&self) -> LimsupConfig {
        let mut c = LimsupConfig::default();
        if let Some(t) = self.estimator_horizon {
            c.horizon = t;
        }
        if let Some(w) = self.window {
            c.window = w;
        }
        if let Some(b) = self.burn_in {
            c.burn_in = b;
        }
        if let Some(tol) = self.conv_tol {
            c.conv_tol = tol;
        }
        c
    }

    pub fn fixed_point(&self) -> FixedPointConfig {
        let mut c = FixedPointConfig::default();
        if let Some(tol) = self.fp_tol {
            c.fp_tol = tol;
        }
        if let Some(iters) = self.max_iters {
            c.max_iters = iters;
        }
        c.divergence_cap = self.bound_cap;
        c
    }
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], r: usize, c: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::input(format!(
            "{name}: expected a {r}x{c} row-major matrix, got {} rows of lengths {:?}",
            rows.len(),
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(r, c, &flat))
}

impl ScenarioFile {
    /// Parses a scenario from JSON text, naming the offending key on
    /// strict-parse failures.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("scenario parse: {e}")))
    }

    /// Serializes back to JSON. Part of the format contract (parse →
    /// serialize → parse is the identity); exercised by the round-trip
    /// tests rather than any subcommand.
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario types serialize infallibly")
    }

    /// Builds and validates the system model.
    pub fn build_model(&self) -> Result<SystemModel, CliError> {
        if self.sensors.len() != self.m {
            return Err(CliError::input(format!(
                "sensors: expected M = {} entries, got {}",
                self.m,
                self.sensors.len()
            )));
        }
        let a = matrix_from_rows("A", &self.a, self.n, self.n)?;
        let proc = matrix_from_rows("proc_noise", &self.proc_noise, self.n, self.n)?;
        let proc = CovMatrix::new(proc)
            .map_err(|e| CliError::input(format!("proc_noise: {e}")))?;
        let mut sensors = Vec::with_capacity(self.sensors.len());
        for (k, s) in self.sensors.iter().enumerate() {
            let p = s.c.len();
            let c = matrix_from_rows(&format!("sensors[{k}].C"), &s.c, p, self.n)?;
            let noise = matrix_from_rows(&format!("sensors[{k}].meas_noise"), &s.meas_noise, p, p)?;
            let noise = CovMatrix::new(noise)
                .map_err(|e| CliError::input(format!("sensors[{k}].meas_noise: {e}")))?;
            sensors.push(SensorModel::new(c, noise));
        }
        let model = SystemModel::new(a, proc, sensors)
            .map_err(|e| CliError::input(format!("system model: {e}")))?;
        let report = validate_system(&model);
        if !report.is_ok() {
            let lines: Vec<String> = report
                .violations
                .iter()
                .map(|v| format!("{} ({})", v.invariant, v.detail))
                .collect();
            return Err(CliError::input(format!(
                "system validation failed: {}",
                lines.join("; ")
            )));
        }
        Ok(model)
    }

    /// Builds the initial covariance `phi_0`.
    pub fn build_phi0(&self) -> Result<CovMatrix, CliError> {
        let phi = matrix_from_rows("phi0", &self.phi0, self.n, self.n)?;
        CovMatrix::new(phi).map_err(|e| CliError::input(format!("phi0: {e}")))
    }

    /// Builds the schedule. Generated-rule construction can hit step budgets,
    /// which map to the budget exit code rather than an input error.
    pub fn build_schedule(&self) -> Result<Schedule, CliError> {
        match &self.schedule {
            ScheduleSpec::Finite(f) => Schedule::finite(f.indices.clone())
                .map_err(|e| CliError::input(format!("schedule.indices: {e}"))),
            ScheduleSpec::Periodic(p) => Schedule::periodic(p.word.clone())
                .map_err(|e| CliError::input(format!("schedule.word: {e}"))),
            ScheduleSpec::Generated(g) => match &g.rule {
                RuleSpec::Example1(r) => Ok(example1_schedule(r.lambda, r.k_max)
                    .map_err(CliError::run)?
                    .schedule),
                RuleSpec::PseudoRandom(r) => Schedule::pseudo_random(r.seed, r.num_sensors)
                    .map_err(|e| CliError::input(format!("schedule.rule: {e}"))),
            },
        }
    }

    /// Checks that every schedule index stays within the sensor bank (probed
    /// over one period or a bounded prefix; generated rules are range-checked
    /// by construction elsewhere).
    pub fn check_indices(&self, model: &SystemModel) -> Result<(), CliError> {
        let over: Option<usize> = match &self.schedule {
            ScheduleSpec::Finite(f) => f.indices.iter().copied().find(|&i| i > model.num_sensors()),
            ScheduleSpec::Periodic(p) => p.word.iter().copied().find(|&i| i > model.num_sensors()),
            ScheduleSpec::Generated(_) => None,
        };
        match over {
            Some(i) => Err(CliError::input(format!(
                "schedule refers to sensor {i}, but the bank has {} sensors",
                model.num_sensors()
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benchmark_json() -> String {
        r#"{
            "n": 2, "M": 2,
            "A": [[2.0, 0.0], [0.0, 0.0]],
            "proc_noise": [[1.0, 0.0], [0.0, 1.0]],
            "sensors": [
                {"C": [[1.0, 0.0]], "meas_noise": [[1.0]]},
                {"C": [[0.0, 1.0]], "meas_noise": [[1.0]]}
            ],
            "phi0": [[0.0, 0.0], [0.0, 0.0]],
            "schedule": {"type": "periodic", "word": [1]}
        }"#
        .to_string()
    }

    #[test]
    fn parses_and_round_trips() {
        let s = ScenarioFile::from_json(&benchmark_json()).unwrap();
        assert_eq!(s.n, 2);
        assert_eq!(s.m, 2);
        let again = ScenarioFile::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
        let model = s.build_model().unwrap();
        assert_eq!(model.num_sensors(), 2);
        s.build_phi0().unwrap();
        s.build_schedule().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_by_name() {
        let text = benchmark_json().replace("\"phi0\"", "\"phi_zero\"");
        let err = ScenarioFile::from_json(&text).unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("phi_zero"), "{}", err.message);
    }

    #[test]
    fn rejects_missing_field_by_name() {
        let text = benchmark_json().replace("\"proc_noise\": [[1.0, 0.0], [0.0, 1.0]],", "");
        let err = ScenarioFile::from_json(&text).unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("proc_noise"), "{}", err.message);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let s = ScenarioFile::from_json(&benchmark_json()).unwrap();
        let mut bad = s.clone();
        bad.a = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let err = bad.build_model().unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains('A'), "{}", err.message);

        let mut bad = s;
        bad.schedule = ScheduleSpec::Periodic(PeriodicSpec { word: vec![3] });
        let model = bad.build_model().unwrap();
        let err = bad.check_indices(&model).unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("sensor 3"), "{}", err.message);
    }

    #[test]
    fn generated_rules_parse() {
        let text = benchmark_json().replace(
            r#"{"type": "periodic", "word": [1]}"#,
            r#"{"type": "generated", "rule": {"name": "example1", "lambda": 2, "k_max": 6}}"#,
        );
        let s = ScenarioFile::from_json(&text).unwrap();
        let sched = s.build_schedule().unwrap();
        assert_eq!(sched.index_at(0).unwrap(), 2);

        let text = benchmark_json().replace(
            r#"{"type": "periodic", "word": [1]}"#,
            r#"{"type": "generated", "rule": {"name": "pseudo_random", "seed": 9, "num_sensors": 2}}"#,
        );
        let s = ScenarioFile::from_json(&text).unwrap();
        let again = ScenarioFile::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn config_overrides_apply() {
        let text = benchmark_json().replace(
            "\"schedule\"",
            "\"config\": {\"fp_tol\": 1e-8, \"window\": 50}, \"schedule\"",
        );
        let s = ScenarioFile::from_json(&text).unwrap();
        assert_eq!(s.config.fixed_point().fp_tol, 1e-8);
        assert_eq!(s.config.limsup().window, 50);
        assert_eq!(s.config.limsup().burn_in, LimsupConfig::default().burn_in);
    }
}
