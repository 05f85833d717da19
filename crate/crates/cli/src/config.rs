//! TOML experiment configuration.
//!
//! Every section is optional except `[source]` and `[service]`; missing
//! sections take the defaults of the bundled `configs/policy_sweep.toml`.

use serde::{Deserialize, Serialize};

use infofresh::experiment::{linear_grid, SweepVariable};
use infofresh::policy::PolicyRegistry;
use infofresh::solver::{SolverOptions, DEFAULT_TOL, DEFAULT_Z_MAX};
use infofresh::{AgePenalty, MarkovSourceModel, ServiceTimeDist};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// CSV destination; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub source: SourceConfig,
    pub service: ServiceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltyConfig>,
    #[serde(default)]
    pub policies: PoliciesConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub mi_curve: MiCurveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    Binary {
        q: f64,
    },
    Gaussian {
        a: f64,
        #[serde(default = "one")]
        sigma2: f64,
    },
    Tabulated {
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// `y:prob` pairs, e.g. `"1:0.5,11:0.5"`.
    pub dist: String,
}

/// Defaults to the negated mutual information of the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PenaltyConfig {
    NegatedMi,
    Affine { slope: f64, intercept: f64 },
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoliciesConfig {
    pub names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_period: Option<u64>,
    /// Fixed threshold (penalty form) instead of the optimal one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl Default for PoliciesConfig {
    fn default() -> Self {
        Self {
            names: vec!["threshold".into(), "zero-wait".into(), "uniform".into()],
            uniform_period: None,
            beta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub horizon: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_delta0")]
    pub delta0: u64,
}

fn default_delta0() -> u64 {
    infofresh::simulator::DEFAULT_DELTA0
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { horizon: 1_000_000, seeds: (1..=10).collect(), delta0: default_delta0() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub z_max: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, z_max: DEFAULT_Z_MAX }
    }
}

/// Either an explicit `grid` or `start`/`stop`/`step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { variable: "q".into(), grid: None, start: Some(0.02), stop: Some(0.5), step: Some(0.02) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiCurveConfig {
    pub delta_min: u64,
    pub delta_max: u64,
}

impl Default for MiCurveConfig {
    fn default() -> Self {
        Self { delta_min: 0, delta_max: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    #[serde(default = "default_trace_policy")]
    pub policy: String,
    pub horizon: u64,
    /// Service time of each sample in order; drawn from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_services: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_trace_policy() -> String {
    "threshold".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Number of random instances.
    pub instances: usize,
    pub z_cap: u64,
    pub seed: u64,
    /// Also check the configured source, penalty and service.
    #[serde(default)]
    pub include_config: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { instances: 20, z_cap: infofresh::analytic::DEFAULT_Z_CAP, seed: 2024, include_config: false }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output: None,
            source: SourceConfig::Binary { q: 0.1 },
            service: ServiceConfig { dist: "1:0.5,11:0.5".into() },
            penalty: None,
            policies: PoliciesConfig::default(),
            simulation: SimulationConfig::default(),
            solver: SolverConfig::default(),
            sweep: Some(SweepConfig::default()),
            mi_curve: MiCurveConfig::default(),
            trace: None,
            oracle: OracleConfig::default(),
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<String>,
    /// Replaces the seed list with `1..=n`.
    pub seeds: Option<u64>,
    pub horizon: Option<u64>,
    pub tol: Option<f64>,
    pub z_max: Option<u64>,
}

/// The validated model objects behind a config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: MarkovSourceModel,
    pub dist: ServiceTimeDist,
    pub penalty: AgePenalty,
    pub solver: SolverOptions,
}

fn field(name: &str) -> impl FnOnce(infofresh::Error) -> CliError + '_ {
    move |source| CliError::Field { field: name.to_string(), source }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, CliError> {
        let config: Self =
            toml::from_str(text).map_err(|e| CliError::Config { path: origin.to_string(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
        if let Some(n) = o.seeds {
            self.simulation.seeds = (1..=n).collect();
        }
        if let Some(h) = o.horizon {
            self.simulation.horizon = h;
            if let Some(t) = &mut self.trace {
                t.horizon = h;
            }
        }
        if let Some(tol) = o.tol {
            self.solver.tol = tol;
        }
        if let Some(z) = o.z_max {
            self.solver.z_max = z;
        }
    }

    pub fn model(&self) -> Result<MarkovSourceModel, CliError> {
        match &self.source {
            SourceConfig::Binary { q } => MarkovSourceModel::binary_symmetric(*q).map_err(field("source.q")),
            SourceConfig::Gaussian { a, sigma2 } => {
                MarkovSourceModel::gaussian_ar1(*a, *sigma2).map_err(field("source"))
            }
            SourceConfig::Tabulated { values } => {
                MarkovSourceModel::tabulated(values.clone()).map_err(field("source.values"))
            }
        }
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let model = self.model()?;
        let dist: ServiceTimeDist = self.service.dist.parse().map_err(field("service.dist"))?;
        let penalty = match &self.penalty {
            None | Some(PenaltyConfig::NegatedMi) => AgePenalty::negated_mi(model.clone()),
            Some(PenaltyConfig::Affine { slope, intercept }) => {
                AgePenalty::affine(*slope, *intercept).map_err(field("penalty"))?
            }
            Some(PenaltyConfig::Table { values }) => AgePenalty::table(values.clone()).map_err(field("penalty.values"))?,
        };
        let solver = SolverOptions::new(self.solver.tol, self.solver.z_max).map_err(field("solver"))?;
        Ok(Setup { model, dist, penalty, solver })
    }

    pub fn sweep_variable(&self) -> Result<SweepVariable, CliError> {
        let sweep = self.sweep.as_ref().ok_or_else(|| CliError::Usage("config has no [sweep] section".into()))?;
        match (sweep.variable.as_str(), &self.source) {
            ("q", SourceConfig::Binary { .. }) => Ok(SweepVariable::BinaryQ),
            ("a", SourceConfig::Gaussian { sigma2, .. }) => Ok(SweepVariable::GaussianA { sigma2: *sigma2 }),
            (v, _) => Err(CliError::Usage(format!(
                "sweep.variable = {v:?} does not match the source kind (q sweeps a binary source, a a gaussian one)"
            ))),
        }
    }

    pub fn sweep_grid(&self) -> Result<Vec<f64>, CliError> {
        let sweep = self.sweep.as_ref().ok_or_else(|| CliError::Usage("config has no [sweep] section".into()))?;
        let grid = match (&sweep.grid, sweep.start, sweep.stop, sweep.step) {
            (Some(g), None, None, None) => g.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                linear_grid(start, stop, step).map_err(field("sweep"))?
            }
            _ => return Err(CliError::Usage("sweep needs either grid or start, stop and step".into())),
        };
        if grid.is_empty() {
            return Err(CliError::Usage("sweep.grid is empty".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Usage("sweep.grid must be strictly increasing".into()));
        }
        Ok(grid)
    }

    /// Checks every field that can be checked without running anything.
    pub fn validate(&self) -> Result<(), CliError> {
        let setup = self.setup()?;
        let registry = PolicyRegistry::with_builtins();
        for name in &self.policies.names {
            registry.get(name).map_err(field("policies.names"))?;
        }
        if self.policies.uniform_period == Some(0) {
            return Err(CliError::Usage("policies.uniform_period must be at least 1".into()));
        }
        if self.sweep.is_some() {
            let variable = self.sweep_variable()?;
            for v in self.sweep_grid()? {
                variable.model(v).map_err(field("sweep.grid"))?;
            }
        }
        if self.mi_curve.delta_min > self.mi_curve.delta_max {
            return Err(CliError::Usage("mi_curve.delta_min exceeds mi_curve.delta_max".into()));
        }
        if let Some(trace) = &self.trace {
            registry.get(&trace.policy).map_err(field("trace.policy"))?;
            if let Some(forced) = &trace.forced_services {
                if let Some(&y) = forced.iter().find(|&&y| !setup.dist.contains(y)) {
                    return Err(CliError::Field {
                        field: "trace.forced_services".into(),
                        source: infofresh::Error::ServiceNotInSupport(y),
                    });
                }
            } else if trace.seed.is_none() {
                return Err(CliError::Usage("trace needs forced_services or a seed".into()));
            }
        }
        if self.oracle.instances == 0 && !self.oracle.include_config {
            return Err(CliError::Usage("oracle check has no instances".into()));
        }
        Ok(())
    }
}
