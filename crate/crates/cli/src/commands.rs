//! One function per subcommand. Each returns the CSV body plus report lines
//! for stderr; nothing here touches the filesystem.

use rayon::prelude::*;

use infofresh::analytic::{renewal_average, zero_wait_average};
use infofresh::experiment::{oracle_check, random_instances, run_sweep, sweep_csv, Instance, SweepSettings};
use infofresh::policy::{uniform_period, PolicyParams, PolicyRegistry, ThresholdPolicy};
use infofresh::report::fmt_sig;
use infofresh::simulator::{replay, simulate, simulate_summary, Metric, RunSummary};
use infofresh::solver::{solve_beta, WaitingFunction};
use infofresh::AgePenalty;

use crate::config::{ExperimentConfig, Setup};
use crate::error::CliError;

/// Largest |beta_solver - beta_oracle| accepted by `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Debug)]
pub struct Output {
    pub csv: String,
    pub report: Vec<String>,
    /// Set when the CSV is valid but the run must still exit non-zero.
    pub failure: Option<CliError>,
}

impl Output {
    fn ok(csv: String, report: Vec<String>) -> Self {
        Self { csv, report, failure: None }
    }
}

/// MI in bits when the penalty is negated MI, the raw penalty otherwise.
fn metric_for(setup: &Setup) -> Metric {
    match &setup.penalty {
        AgePenalty::NegatedMi(model) => Metric::MutualInformation(model.clone()),
        other => Metric::Penalty(other.clone()),
    }
}

/// Converts a penalty-form average into the units of [`metric_for`].
fn in_metric_units(setup: &Setup, penalty_average: f64) -> f64 {
    match setup.penalty {
        AgePenalty::NegatedMi(_) => -penalty_average,
        _ => penalty_average,
    }
}

fn policy_params<'a>(config: &ExperimentConfig, setup: &'a Setup) -> PolicyParams<'a> {
    PolicyParams {
        dist: &setup.dist,
        penalty: Some(&setup.penalty),
        period: config.policies.uniform_period,
        beta: config.policies.beta,
        solver: setup.solver,
    }
}

pub fn mi_curve(config: &ExperimentConfig) -> Result<Output, CliError> {
    let model = config.model()?;
    let mut csv = String::from("delta,mi_bits\n");
    for delta in config.mi_curve.delta_min..=config.mi_curve.delta_max {
        csv.push_str(&format!("{delta},{}\n", fmt_sig(model.mutual_information(delta))));
    }
    Ok(Output::ok(csv, vec![format!("source {model}")]))
}

pub fn solve(config: &ExperimentConfig) -> Result<Output, CliError> {
    let setup = config.setup()?;
    let res = solve_beta(&setup.penalty, &setup.dist, setup.solver)?;
    let mut csv = String::from("y,prob,wait,beta,h_residual,iterations\n");
    for (&(y, prob), (_, z)) in setup.dist.support().iter().zip(res.waiting.iter()) {
        csv.push_str(&format!(
            "{y},{},{z},{},{},{}\n",
            fmt_sig(prob),
            fmt_sig(res.beta),
            fmt_sig(res.h_residual),
            res.iterations
        ));
    }
    let zero_wait = zero_wait_average(&setup.penalty, &setup.dist);
    let mut report = vec![
        format!("penalty {} with Y ~ {{{}}}", setup.penalty, setup.dist),
        format!("optimal average penalty beta = {}", fmt_sig(res.beta)),
        format!("zero-wait average penalty    = {}", fmt_sig(zero_wait)),
        format!("waits {}", waits_text(&res.waiting)),
        format!("h(beta) = {:e} after {} bisection steps", res.h_residual, res.iterations),
    ];
    if let AgePenalty::NegatedMi(_) = setup.penalty {
        report.push(format!(
            "optimal average MI = {} bits (zero-wait {})",
            fmt_sig(-res.beta),
            fmt_sig(-zero_wait)
        ));
    }
    Ok(Output::ok(csv, report))
}

fn waits_text(w: &WaitingFunction) -> String {
    w.iter().map(|(y, z)| format!("Z({y})={z}")).collect::<Vec<_>>().join(" ")
}

pub fn sweep(config: &ExperimentConfig) -> Result<Output, CliError> {
    let setup = config.setup()?;
    let variable = config.sweep_variable()?;
    let grid = config.sweep_grid()?;
    if config.simulation.seeds.len() < 2 {
        return Err(CliError::Usage("sweep needs at least two seeds for a standard error".into()));
    }
    let settings = SweepSettings {
        uniform_period: config.policies.uniform_period.unwrap_or_else(|| uniform_period(&setup.dist)),
        dist: setup.dist,
        horizon: config.simulation.horizon,
        seeds: config.simulation.seeds.clone(),
        delta0: config.simulation.delta0,
        solver: setup.solver,
    };
    let rows = run_sweep(variable, &grid, &settings)?;
    let violations = rows
        .iter()
        .filter(|r| r.i_opt < r.i_zero_wait - 1e-9 || r.i_zero_wait < r.i_uniform_mean - 3.0 * r.i_uniform_stderr)
        .count();
    let report = vec![
        format!(
            "{} points, Y ~ {{{}}}, uniform period {}, horizon {}, {} seeds",
            rows.len(),
            settings.dist,
            settings.uniform_period,
            settings.horizon,
            settings.seeds.len()
        ),
        format!("points breaking opt >= zero-wait >= uniform: {violations}"),
    ];
    Ok(Output::ok(sweep_csv(variable, &rows), report))
}

pub fn simulate_policies(config: &ExperimentConfig) -> Result<Output, CliError> {
    let setup = config.setup()?;
    if config.simulation.seeds.is_empty() {
        return Err(CliError::Usage("simulation.seeds is empty".into()));
    }
    let registry = PolicyRegistry::with_builtins();
    let params = policy_params(config, &setup);
    let metric = metric_for(&setup);
    let sim = &config.simulation;

    let mut csv = format!("policy,{}\n", RunSummary::CSV_HEADER);
    let mut report = Vec::new();
    for name in &config.policies.names {
        let policy = registry.build(name, &params)?;
        let runs = sim
            .seeds
            .par_iter()
            .map(|&seed| simulate_summary(policy.as_ref(), &metric, &setup.dist, sim.horizon, seed, sim.delta0))
            .collect::<Result<Vec<_>, _>>()?;
        for run in &runs {
            csv.push_str(&format!("{name},{}\n", run.to_csv_row()));
        }
        let mean = runs.iter().map(|r| r.time_average).sum::<f64>() / runs.len() as f64;
        let exact = match name.as_str() {
            "zero-wait" => Some(zero_wait_average(&setup.penalty, &setup.dist)),
            "threshold" => {
                let policy = match config.policies.beta {
                    Some(beta) => ThresholdPolicy::with_beta(&setup.penalty, &setup.dist, beta, setup.solver.z_max)?,
                    None => ThresholdPolicy::optimal(&setup.penalty, &setup.dist, setup.solver)?,
                };
                Some(renewal_average(&setup.penalty, &setup.dist, policy.waiting()))
            }
            _ => None,
        };
        let exact = exact.map(|v| format!(", renewal average {}", fmt_sig(in_metric_units(&setup, v))));
        report.push(format!("{name}: mean time average {}{}", fmt_sig(mean), exact.unwrap_or_default()));
    }
    Ok(Output::ok(csv, report))
}

pub fn trace(config: &ExperimentConfig) -> Result<Output, CliError> {
    let setup = config.setup()?;
    let trace_cfg = config.trace.as_ref().ok_or_else(|| CliError::Usage("config has no [trace] section".into()))?;
    let policy = PolicyRegistry::with_builtins().build(&trace_cfg.policy, &policy_params(config, &setup))?;
    let metric = metric_for(&setup);
    let delta0 = config.simulation.delta0;
    let (trace, summary) = match (&trace_cfg.forced_services, trace_cfg.seed) {
        (Some(forced), _) => replay(policy.as_ref(), &metric, &setup.dist, forced, trace_cfg.horizon, delta0)?,
        (None, Some(seed)) => simulate(policy.as_ref(), &metric, &setup.dist, trace_cfg.horizon, seed, delta0)?,
        (None, None) => return Err(CliError::Usage("trace needs forced_services or a seed".into())),
    };
    let waits = trace
        .waits_after_delivery()
        .iter()
        .map(|(y, z)| format!("Y={y}->Z={z}"))
        .collect::<Vec<_>>()
        .join(" ");
    let report = vec![
        format!("{} policy over {} steps", policy.name(), trace_cfg.horizon),
        format!(
            "{} generated, {} delivered, time average {}",
            summary.samples_generated,
            summary.samples_delivered,
            fmt_sig(summary.time_average)
        ),
        format!("waits after delivery: {waits}"),
    ];
    Ok(Output::ok(trace.to_csv(), report))
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn oracle(config: &ExperimentConfig) -> Result<Output, CliError> {
    let oc = config.oracle;
    let mut instances = random_instances(oc.instances, oc.seed);
    if oc.include_config {
        let setup = config.setup()?;
        instances.push(Instance {
            label: format!("config {} Y~{{{}}}", setup.penalty, setup.dist),
            penalty: setup.penalty,
            dist: setup.dist,
        });
    }
    let solver = config.setup().map(|s| s.solver)?;
    let report = oracle_check(&instances, oc.z_cap, solver)?;

    let mut csv = String::from("instance,beta_solver,beta_oracle,solver_ratio,deviation,max_solver_wait,max_oracle_wait\n");
    for c in &report.comparisons {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_quote(&c.label),
            fmt_sig(c.beta_solver),
            fmt_sig(c.beta_oracle),
            fmt_sig(c.solver_ratio),
            fmt_sig(c.deviation()),
            c.max_solver_wait,
            c.max_oracle_wait
        ));
    }
    let max_dev = report.max_deviation();
    let worst = report.worst().map(|c| c.label.clone()).unwrap_or_default();
    let pass = max_dev <= ORACLE_TOLERANCE;
    let lines = vec![format!(
        "{} {} instances, z_cap {}, max deviation {:e}",
        if pass { "PASS" } else { "FAIL" },
        report.comparisons.len(),
        oc.z_cap,
        max_dev
    )];
    let failure = (!pass).then_some(CliError::OracleMismatch { max_deviation: max_dev, tolerance: ORACLE_TOLERANCE, worst });
    Ok(Output { csv, report: lines, failure })
}
