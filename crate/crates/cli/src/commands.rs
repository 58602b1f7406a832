//! Implementations of the four subcommands. Each returns the process exit
//! code on success; errors carry their own code.

use std::path::Path;

use serde_json::json;

use sensched_core::{
    check_corollary3, check_example1, check_lemma1, check_prop1, check_theorem1, default_suite,
    enumerate_periodic, example1_system, monte_carlo_consistency, propagate,
    universal_approx_construct, ApproxConfig, CheckReport, CovMatrix, Schedule, SearchConfig,
    SystemModel,
};

use crate::error::CliError;
use crate::output::{fmt_float, write_atomic};
use crate::scenario::ScenarioFile;

fn load_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("reading {}: {e}", path.display())))?;
    ScenarioFile::from_json(&text)
        .map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
}

fn load_model(scenario: &ScenarioFile) -> Result<(SystemModel, CovMatrix, Schedule), CliError> {
    let model = scenario.build_model()?;
    let phi0 = scenario.build_phi0()?;
    let sched = scenario.build_schedule()?;
    scenario.check_indices(&model)?;
    Ok((model, phi0, sched))
}

/// `simulate`: propagate the covariance sequence and write one CSV row per
/// step, `t, trace, lambda_max, sigma_i_j...` (row 0 is `phi0`).
pub fn simulate(scenario_path: &Path, horizon: usize, out: &Path) -> Result<i32, CliError> {
    if horizon == 0 {
        return Err(CliError::input(String::from("--horizon must be >= 1")));
    }
    let scenario = load_scenario(scenario_path)?;
    let (model, phi0, sched) = load_model(&scenario)?;
    let indices = sched.prefix(horizon).map_err(CliError::run)?;
    let traj = propagate(&model, &phi0, &indices).map_err(CliError::run)?;

    let n = model.n();
    let mut csv = String::from("t,trace,lambda_max");
    for i in 0..n {
        for j in 0..n {
            csv.push_str(&format!(",sigma_{i}_{j}"));
        }
    }
    csv.push('\n');
    let mut push_row = |t: usize, cov: &CovMatrix| {
        csv.push_str(&format!(
            "{t},{},{}",
            fmt_float(cov.trace()),
            fmt_float(cov.lambda_max())
        ));
        for i in 0..n {
            for j in 0..n {
                csv.push_str(&format!(",{}", fmt_float(cov.matrix()[(i, j)])));
            }
        }
        csv.push('\n');
    };
    push_row(0, &phi0);
    for (t, cov) in traj.covs.iter().enumerate() {
        push_row(t + 1, cov);
    }
    write_atomic(out, &csv)?;
    Ok(0)
}

/// `search`: enumerate periodic schedules up to `max_period`; summary record
/// on stdout, per-period table as CSV when `--out` is given.
pub fn search(
    scenario_path: &Path,
    max_period: usize,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    let scenario = load_scenario(scenario_path)?;
    let (model, _phi0, _sched) = load_model(&scenario)?;
    let config = SearchConfig {
        fixed_point: scenario.config.fixed_point(),
        ..SearchConfig::default()
    };
    let res = enumerate_periodic(&model, max_period, &config).map_err(CliError::run)?;

    let per_period: Vec<_> = res
        .per_period_best
        .iter()
        .map(|(period, pb)| {
            json!({
                "period": period,
                "word": pb.word.word(),
                "cost": pb.cost,
            })
        })
        .collect();
    let record = json!({
        "best_word": res.best_schedule.word(),
        "best_cost": res.best_cost,
        "explored": res.explored,
        "pruned": res.pruned,
        "infeasible": res.infeasible,
        "per_period_best": per_period,
    });
    println!("{}", serde_json::to_string_pretty(&record).expect("json"));

    if let Some(path) = out {
        let mut csv = String::from("period,word,cost\n");
        for (period, pb) in &res.per_period_best {
            let word: Vec<String> = pb.word.word().iter().map(usize::to_string).collect();
            csv.push_str(&format!("{period},{},{}\n", word.join("-"), fmt_float(pb.cost)));
        }
        write_atomic(path, &csv)?;
    }
    Ok(0)
}

/// `approx`: construct a periodic schedule within `delta` of the scenario
/// schedule's long-run average cost.
pub fn approx(scenario_path: &Path, delta: f64, out: Option<&Path>) -> Result<i32, CliError> {
    let scenario = load_scenario(scenario_path)?;
    let (model, _phi0, sched) = load_model(&scenario)?;
    let config = ApproxConfig {
        limsup: scenario.config.limsup(),
        fixed_point: scenario.config.fixed_point(),
        bound_cap: scenario.config.bound_cap,
        ..ApproxConfig::default()
    };
    let report = universal_approx_construct(&model, &sched, delta, &config).map_err(CliError::run)?;
    let record = json!({
        "word": report.word.word(),
        "period": report.word.period(),
        "cycle_avg_cost": report.cycle_avg_cost,
        "limsup_estimate": report.limsup_estimate,
        "gap": report.gap,
        "prefix_len": report.n_k,
        "bridge_len": report.recurrence_l,
        "recurrence_radius": report.recurrence_radius,
        "anchor_norm": report.phi_hat_norm,
    });
    let text = serde_json::to_string_pretty(&record).expect("json");
    println!("{text}");
    if let Some(path) = out {
        write_atomic(path, &format!("{text}\n"))?;
    }
    Ok(0)
}

/// Which verification battery to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Every check below, with per-check seed offsets.
    All,
    /// Monotonicity/concavity of the update maps (1000 instances).
    Lemma1,
    /// Trajectory merging and initialization independence (50 schedules).
    Theorem1,
    /// Derivative trace/first-order bounds and finite differences (50 systems).
    Prop1,
    /// The alternating-burst benchmark pathology.
    Example1,
    /// Flat running averages from the best schedule's cycle point.
    Corollary3,
    /// 100k-run Monte Carlo covariance consistency.
    MonteCarlo,
}

fn run_suite(suite: Suite, seed: u64) -> Vec<CheckReport> {
    match suite {
        Suite::All => default_suite(seed),
        Suite::Lemma1 => vec![check_lemma1(seed, 1000)],
        Suite::Theorem1 => vec![check_theorem1(seed, 50, 500)],
        Suite::Prop1 => vec![check_prop1(seed, 50, 50)],
        Suite::Example1 => vec![check_example1(2, 1.0, 1.0, 6)],
        Suite::Corollary3 => vec![benchmark_corollary3(seed)],
        Suite::MonteCarlo => vec![benchmark_monte_carlo(seed)],
    }
}

fn benchmark_corollary3(_seed: u64) -> CheckReport {
    match example1_system(2.0, 1.0, 1.0)
        .and_then(|model| enumerate_periodic(&model, 3, &SearchConfig::default()).map(|r| (model, r)))
    {
        Ok((model, res)) => check_corollary3(&model, &res, 2000),
        Err(e) => CheckReport {
            name: String::from("corollary3_cycle_average"),
            instance: String::from("benchmark best schedule"),
            pass: false,
            margin: f64::NEG_INFINITY,
            details: vec![format!("aborted: {e}")],
        },
    }
}

fn benchmark_monte_carlo(seed: u64) -> CheckReport {
    let setup = || -> sensched_core::Result<(SystemModel, Schedule, CovMatrix)> {
        Ok((
            example1_system(2.0, 1.0, 1.0)?,
            Schedule::periodic(vec![1])?,
            CovMatrix::zeros(2)?,
        ))
    };
    match setup() {
        Ok((model, sched, phi)) => {
            monte_carlo_consistency(&model, &sched, &phi, 50, 100_000, seed)
        }
        Err(e) => CheckReport {
            name: String::from("monte_carlo_consistency"),
            instance: String::from("benchmark equilibrium schedule"),
            pass: false,
            margin: f64::NEG_INFINITY,
            details: vec![format!("aborted: {e}")],
        },
    }
}

/// `verify`: run a suite, print one status block per check, exit 0 iff all
/// pass. With `--out`, also write the reports as JSON Lines.
pub fn verify(suite: Suite, seed: u64, out: Option<&Path>) -> Result<i32, CliError> {
    let reports = run_suite(suite, seed);
    let mut all_pass = true;
    for r in &reports {
        println!(
            "[{}] {} — {} (margin {:.3e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.instance,
            r.margin
        );
        for d in &r.details {
            println!("    {d}");
        }
        all_pass &= r.pass;
    }
    if let Some(path) = out {
        let mut lines = String::new();
        for r in &reports {
            let rec = json!({
                "name": r.name,
                "instance": r.instance,
                "pass": r.pass,
                "margin": r.margin,
                "details": r.details,
                "seed": seed,
            });
            lines.push_str(&serde_json::to_string(&rec).expect("json"));
            lines.push('\n');
        }
        write_atomic(path, &lines)?;
    }
    Ok(if all_pass { 0 } else { 1 })
}
