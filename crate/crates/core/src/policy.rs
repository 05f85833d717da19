//! Sampling policies behind one trait, looked up by name at runtime.
//!
//! A policy decides, when sample `i` is generated with service time `Y_i`,
//! when sample `i + 1` will be generated: either a fixed number of steps
//! after this generation (the server may still be busy, so samples queue),
//! or a number of steps after this sample's delivery.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::service::ServiceTimeDist;
use crate::solver::{optimal_wait, solve_beta, SolverOptions, SolverResult, WaitingFunction};
use crate::sources::AgePenalty;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextSample {
    /// Generate the next sample this many steps after the current one was
    /// generated.
    AfterGeneration(u64),
    /// Generate the next sample this many steps after the current one is
    /// delivered.
    AfterDelivery(u64),
}

pub trait SamplingPolicy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Schedule for the sample following one whose service time is `service`.
    fn next_sample(&self, service: u64) -> Result<NextSample>;
}

/// Samples every `period` steps regardless of the server state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformPolicy {
    period: u64,
}

impl UniformPolicy {
    pub fn new(period: u64) -> Result<Self> {
        if period == 0 {
            return Err(Error::OutOfRange("uniform sampling period must be at least 1".into()));
        }
        Ok(Self { period })
    }

    pub fn period(&self) -> u64 {
        self.period
    }
}

impl SamplingPolicy for UniformPolicy {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn next_sample(&self, _service: u64) -> Result<NextSample> {
        Ok(NextSample::AfterGeneration(self.period))
    }
}

/// Period closest to the mean service time, ties rounded up.
pub fn uniform_period(dist: &ServiceTimeDist) -> u64 {
    ((dist.mean() + 0.5).floor() as u64).max(1)
}

/// Samples the moment the previous sample is delivered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroWaitPolicy;

impl SamplingPolicy for ZeroWaitPolicy {
    fn name(&self) -> &'static str {
        "zero-wait"
    }

    fn next_sample(&self, _service: u64) -> Result<NextSample> {
        Ok(NextSample::AfterDelivery(0))
    }
}

/// After a delivery with service `y`, waits the smallest `n` with
/// `E[p(y + n + Y')] >= beta`. The waits are tabulated once per support
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPolicy {
    beta: f64,
    waiting: WaitingFunction,
}

impl ThresholdPolicy {
    pub fn with_beta(penalty: &AgePenalty, dist: &ServiceTimeDist, beta: f64, z_max: u64) -> Result<Self> {
        let waits = dist
            .values()
            .map(|y| optimal_wait(penalty, dist, y, beta, z_max).map(|z| (y, z)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { beta, waiting: WaitingFunction::new(dist, waits)? })
    }

    /// Uses the optimal threshold for `penalty`.
    pub fn optimal(penalty: &AgePenalty, dist: &ServiceTimeDist, opts: SolverOptions) -> Result<Self> {
        Ok(Self::from_solution(solve_beta(penalty, dist, opts)?))
    }

    pub fn from_solution(solution: SolverResult) -> Self {
        Self { beta: solution.beta, waiting: solution.waiting }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn waiting(&self) -> &WaitingFunction {
        &self.waiting
    }
}

impl SamplingPolicy for ThresholdPolicy {
    fn name(&self) -> &'static str {
        "threshold"
    }

    fn next_sample(&self, service: u64) -> Result<NextSample> {
        self.waiting
            .get(service)
            .map(NextSample::AfterDelivery)
            .ok_or(Error::ServiceNotInSupport(service))
    }
}

/// Everything a factory may need to build a policy.
#[derive(Debug, Clone, Copy)]
pub struct PolicyParams<'a> {
    pub dist: &'a ServiceTimeDist,
    pub penalty: Option<&'a AgePenalty>,
    /// Uniform period; defaults to [`uniform_period`].
    pub period: Option<u64>,
    /// Threshold in penalty form; solved for when absent.
    pub beta: Option<f64>,
    pub solver: SolverOptions,
}

impl<'a> PolicyParams<'a> {
    pub fn new(dist: &'a ServiceTimeDist) -> Self {
        Self { dist, penalty: None, period: None, beta: None, solver: SolverOptions::default() }
    }

    pub fn with_penalty(mut self, penalty: &'a AgePenalty) -> Self {
        self.penalty = Some(penalty);
        self
    }
}

pub trait PolicyFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn build(&self, params: &PolicyParams<'_>) -> Result<Arc<dyn SamplingPolicy>>;
}

struct UniformFactory;

impl PolicyFactory for UniformFactory {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn summary(&self) -> &'static str {
        "periodic sampling; samples queue while the server is busy"
    }

    fn build(&self, params: &PolicyParams<'_>) -> Result<Arc<dyn SamplingPolicy>> {
        let period = params.period.unwrap_or_else(|| uniform_period(params.dist));
        Ok(Arc::new(UniformPolicy::new(period)?))
    }
}

struct ZeroWaitFactory;

impl PolicyFactory for ZeroWaitFactory {
    fn name(&self) -> &'static str {
        "zero-wait"
    }

    fn summary(&self) -> &'static str {
        "sample as soon as the previous sample is delivered"
    }

    fn build(&self, _params: &PolicyParams<'_>) -> Result<Arc<dyn SamplingPolicy>> {
        Ok(Arc::new(ZeroWaitPolicy))
    }
}

struct ThresholdFactory;

impl PolicyFactory for ThresholdFactory {
    fn name(&self) -> &'static str {
        "threshold"
    }

    fn summary(&self) -> &'static str {
        "wait after each delivery until the expected penalty reaches the optimal threshold"
    }

    fn build(&self, params: &PolicyParams<'_>) -> Result<Arc<dyn SamplingPolicy>> {
        let penalty = params
            .penalty
            .ok_or(Error::MissingParameter { policy: "threshold".into(), param: "penalty" })?;
        let policy = match params.beta {
            Some(beta) => ThresholdPolicy::with_beta(penalty, params.dist, beta, params.solver.z_max)?,
            None => ThresholdPolicy::optimal(penalty, params.dist, params.solver)?,
        };
        Ok(Arc::new(policy))
    }
}

/// Named policy factories, in registration order.
pub struct PolicyRegistry {
    factories: Vec<Arc<dyn PolicyFactory>>,
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        Self { factories: Vec::new() }
    }

    /// `uniform`, `zero-wait` and `threshold`.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(UniformFactory));
        registry.register(Arc::new(ZeroWaitFactory));
        registry.register(Arc::new(ThresholdFactory));
        registry
    }

    /// Adds a factory, replacing any previous one with the same name.
    pub fn register(&mut self, factory: Arc<dyn PolicyFactory>) {
        self.factories.retain(|f| f.name() != factory.name());
        self.factories.push(factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.iter().map(|f| f.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn PolicyFactory>> {
        self.factories
            .iter()
            .find(|f| f.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownPolicy { name: name.to_string(), known: self.names().join(", ") })
    }

    pub fn build(&self, name: &str, params: &PolicyParams<'_>) -> Result<Arc<dyn SamplingPolicy>> {
        self.get(name)?.build(params)
    }
}

impl Default for PolicyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::MarkovSourceModel;

    fn one_or_five() -> ServiceTimeDist {
        ServiceTimeDist::new([(1, 0.5), (5, 0.5)]).unwrap()
    }

    #[test]
    fn builtins_are_registered_by_name() {
        let registry = PolicyRegistry::with_builtins();
        assert_eq!(registry.names(), ["uniform", "zero-wait", "threshold"]);
        let d = one_or_five();
        let p = registry.build("zero-wait", &PolicyParams::new(&d)).unwrap();
        assert_eq!(p.name(), "zero-wait");
        assert_eq!(p.next_sample(5).unwrap(), NextSample::AfterDelivery(0));
    }

    #[test]
    fn unknown_policy_lists_known_names() {
        let registry = PolicyRegistry::with_builtins();
        let d = one_or_five();
        match registry.build("random", &PolicyParams::new(&d)) {
            Err(Error::UnknownPolicy { name, known }) => {
                assert_eq!(name, "random");
                assert!(known.contains("threshold"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_period_defaults_to_rounded_mean() {
        assert_eq!(uniform_period(&ServiceTimeDist::new([(1, 0.5), (11, 0.5)]).unwrap()), 6);
        assert_eq!(uniform_period(&ServiceTimeDist::new([(1, 0.5), (2, 0.5)]).unwrap()), 2);
        assert_eq!(uniform_period(&ServiceTimeDist::new([(1, 0.6), (2, 0.4)]).unwrap()), 1);
        let registry = PolicyRegistry::with_builtins();
        let d = ServiceTimeDist::new([(1, 0.5), (11, 0.5)]).unwrap();
        let p = registry.build("uniform", &PolicyParams::new(&d)).unwrap();
        assert_eq!(p.next_sample(11).unwrap(), NextSample::AfterGeneration(6));
        assert!(UniformPolicy::new(0).is_err());
    }

    #[test]
    fn threshold_requires_penalty() {
        let registry = PolicyRegistry::with_builtins();
        let d = one_or_five();
        assert!(matches!(
            registry.build("threshold", &PolicyParams::new(&d)),
            Err(Error::MissingParameter { param: "penalty", .. })
        ));
    }

    #[test]
    fn threshold_waits_after_short_service_only() {
        let d = one_or_five();
        let penalty = AgePenalty::negated_mi(MarkovSourceModel::binary_symmetric(0.1).unwrap());
        let registry = PolicyRegistry::with_builtins();
        let p = registry.build("threshold", &PolicyParams::new(&d).with_penalty(&penalty)).unwrap();
        assert_eq!(p.next_sample(1).unwrap(), NextSample::AfterDelivery(1));
        assert_eq!(p.next_sample(5).unwrap(), NextSample::AfterDelivery(0));
        assert!(matches!(p.next_sample(3), Err(Error::ServiceNotInSupport(3))));
    }

    #[test]
    fn explicit_beta_is_used_verbatim() {
        let d = ServiceTimeDist::deterministic(4).unwrap();
        let age = AgePenalty::affine(1.0, 0.0).unwrap();
        let p = ThresholdPolicy::with_beta(&age, &d, 10.0, 100).unwrap();
        assert_eq!(p.beta(), 10.0);
        assert_eq!(p.next_sample(4).unwrap(), NextSample::AfterDelivery(2));
    }

    #[derive(Debug)]
    struct Fixed(u64);

    impl SamplingPolicy for Fixed {
        fn name(&self) -> &'static str {
            "fixed"
        }

        fn next_sample(&self, _service: u64) -> Result<NextSample> {
            Ok(NextSample::AfterDelivery(self.0))
        }
    }

    struct FixedFactory;

    impl PolicyFactory for FixedFactory {
        fn name(&self) -> &'static str {
            "fixed"
        }

        fn summary(&self) -> &'static str {
            "constant wait"
        }

        fn build(&self, params: &PolicyParams<'_>) -> Result<Arc<dyn SamplingPolicy>> {
            Ok(Arc::new(Fixed(params.period.unwrap_or(3))))
        }
    }

    #[test]
    fn custom_factories_can_be_registered() {
        let mut registry = PolicyRegistry::with_builtins();
        registry.register(Arc::new(FixedFactory));
        registry.register(Arc::new(FixedFactory));
        assert_eq!(registry.names().len(), 4);
        let d = one_or_five();
        let p = registry.build("fixed", &PolicyParams::new(&d)).unwrap();
        assert_eq!(p.next_sample(1).unwrap(), NextSample::AfterDelivery(3));
    }
}
