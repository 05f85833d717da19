//! Policy comparisons over a source-parameter grid, and the randomized
//! solver-versus-oracle suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::{brute_force_optimum, renewal_average, zero_wait_average};
use crate::error::{Error, Result};
use crate::policy::UniformPolicy;
use crate::report::fmt_sig;
use crate::service::ServiceTimeDist;
use crate::simulator::{estimate_time_average, Metric};
use crate::solver::{solve_beta, solve_mi, SolverOptions};
use crate::sources::{AgePenalty, MarkovSourceModel};

/// Source parameter swept across a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepVariable {
    /// Flip probability of the binary symmetric source.
    BinaryQ,
    /// AR(1) coefficient of the Gaussian source.
    GaussianA { sigma2: f64 },
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BinaryQ => "q",
            Self::GaussianA { .. } => "a",
        }
    }

    pub fn model(&self, value: f64) -> Result<MarkovSourceModel> {
        match *self {
            Self::BinaryQ => MarkovSourceModel::binary_symmetric(value),
            Self::GaussianA { sigma2 } => MarkovSourceModel::gaussian_ar1(value, sigma2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub dist: ServiceTimeDist,
    pub uniform_period: u64,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub delta0: u64,
    pub solver: SolverOptions,
}

/// Time-average mutual information of the three policies at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Optimal threshold policy, exact.
    pub i_opt: f64,
    /// Zero-wait, exact.
    pub i_zero_wait: f64,
    /// Uniform sampling, simulated across seeds.
    pub i_uniform_mean: f64,
    pub i_uniform_stderr: f64,
}

pub fn sweep_point(variable: SweepVariable, value: f64, settings: &SweepSettings) -> Result<SweepRow> {
    let model = variable.model(value)?;
    let i_opt = solve_mi(&model, &settings.dist, settings.solver)?.beta;
    let i_zero_wait = -zero_wait_average(&AgePenalty::negated_mi(model.clone()), &settings.dist);
    let uniform = UniformPolicy::new(settings.uniform_period)?;
    let est = estimate_time_average(
        &uniform,
        &Metric::MutualInformation(model),
        &settings.dist,
        settings.horizon,
        &settings.seeds,
        settings.delta0,
    )?;
    Ok(SweepRow { value, i_opt, i_zero_wait, i_uniform_mean: est.mean, i_uniform_stderr: est.std_error })
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn run_sweep(variable: SweepVariable, grid: &[f64], settings: &SweepSettings) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::OutOfRange("sweep grid is empty".into()));
    }
    grid.par_iter().map(|&v| sweep_point(variable, v, settings)).collect()
}

pub fn sweep_csv(variable: SweepVariable, rows: &[SweepRow]) -> String {
    let mut out = format!("{},i_opt,i_zero_wait,i_uniform_mean,i_uniform_stderr\n", variable.name());
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(r.value),
            fmt_sig(r.i_opt),
            fmt_sig(r.i_zero_wait),
            fmt_sig(r.i_uniform_mean),
            fmt_sig(r.i_uniform_stderr)
        ));
    }
    out
}

/// `start, start + step, ...` up to `stop` inclusive, snapping the last
/// point onto `stop` when within rounding.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::OutOfRange(format!("invalid grid {start}..{stop} step {step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| {
            let v = start + i as f64 * step;
            if (v - stop).abs() <= 1e-9 * step {
                stop
            } else {
                v
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub label: String,
    pub penalty: AgePenalty,
    pub dist: ServiceTimeDist,
}

/// Random small problems cycling through three penalty families: negated
/// binary MI (`q` in [0.05, 0.45]), negated Gaussian MI (`a` in
/// [0.3, 0.95]) and affine. Services have at most three support points in
/// `1..=6`.
pub fn random_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let dist = random_dist(&mut rng, 3, 6);
            let (label, penalty) = match i % 3 {
                0 => {
                    let q = rng.random_range(0.05..=0.45);
                    (format!("binary q={q:.4}"), MarkovSourceModel::binary_symmetric(q).map(AgePenalty::negated_mi))
                }
                1 => {
                    let a = rng.random_range(0.3..=0.95);
                    (format!("gaussian a={a:.4}"), MarkovSourceModel::gaussian_ar1(a, 1.0).map(AgePenalty::negated_mi))
                }
                _ => {
                    let slope = rng.random_range(0.1..=2.0);
                    let intercept = rng.random_range(-5.0..=5.0);
                    (format!("affine {slope:.3}*age{intercept:+.3}"), AgePenalty::affine(slope, intercept))
                }
            };
            Instance {
                label: format!("#{i} {label} Y~{{{dist}}}"),
                penalty: penalty.expect("parameters drawn inside valid ranges"),
                dist,
            }
        })
        .collect()
}

/// Distinct service times in `1..=y_max`, between one and `max_support`
/// of them, with random positive weights.
pub fn random_dist(rng: &mut impl Rng, max_support: usize, y_max: u64) -> ServiceTimeDist {
    let size = rng.random_range(1..=max_support.min(y_max as usize));
    let mut ys: Vec<u64> = Vec::with_capacity(size);
    while ys.len() < size {
        let y = rng.random_range(1..=y_max);
        if !ys.contains(&y) {
            ys.push(y);
        }
    }
    let weights: Vec<f64> = (0..size).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    ServiceTimeDist::new(ys.into_iter().zip(weights.into_iter().map(|w| w / total)))
        .expect("valid random distribution")
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub label: String,
    pub beta_solver: f64,
    pub beta_oracle: f64,
    /// Exact average achieved by the solver's waiting function.
    pub solver_ratio: f64,
    pub max_solver_wait: u64,
    pub max_oracle_wait: u64,
}

impl OracleComparison {
    /// Worse of the threshold gap and the achieved-ratio gap.
    pub fn deviation(&self) -> f64 {
        (self.beta_solver - self.beta_oracle)
            .abs()
            .max((self.solver_ratio - self.beta_oracle).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub comparisons: Vec<OracleComparison>,
}

impl OracleReport {
    pub fn max_deviation(&self) -> f64 {
        self.comparisons.iter().map(|c| c.deviation()).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&OracleComparison> {
        self.comparisons
            .iter()
            .max_by(|a, b| a.deviation().total_cmp(&b.deviation()))
    }
}

pub fn compare_with_oracle(instance: &Instance, z_cap: u64, solver: SolverOptions) -> Result<OracleComparison> {
    let solved = solve_beta(&instance.penalty, &instance.dist, solver)?;
    let oracle = brute_force_optimum(&instance.penalty, &instance.dist, z_cap)?;
    Ok(OracleComparison {
        label: instance.label.clone(),
        beta_solver: solved.beta,
        beta_oracle: oracle.best_ratio,
        solver_ratio: renewal_average(&instance.penalty, &instance.dist, &solved.waiting),
        max_solver_wait: solved.waiting.max_wait(),
        max_oracle_wait: oracle.best_waiting.max_wait(),
    })
}

pub fn oracle_check(instances: &[Instance], z_cap: u64, solver: SolverOptions) -> Result<OracleReport> {
    let comparisons = instances
        .par_iter()
        .map(|inst| compare_with_oracle(inst, z_cap, solver))
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport { comparisons })
}
