//! Information freshness through a queue.
//!
//! A Markov source is sampled and its samples pass through a FIFO
//! single-server queue with i.i.d. integer service times. Freshness at the
//! receiver is the mutual information between the current source value and
//! the delivered samples, a non-increasing function of the age of
//! information.
//!
//! - [`sources`]: source models, their MI-vs-age curves, age penalties.
//! - [`service`]: service-time distributions.
//! - [`solver`]: optimal threshold and waiting function for any
//!   non-decreasing age penalty, by bisection on the Dinkelbach function.
//! - [`analytic`]: exact renewal-reward averages and an exhaustive oracle.
//! - [`policy`]: sampling policies behind a trait, with a name registry.
//! - [`simulator`]: step-by-step queue simulation.
//! - [`experiment`]: policy sweeps and the randomized oracle suite.

pub mod analytic;
pub mod error;
pub mod experiment;
pub mod policy;
pub mod report;
pub mod service;
pub mod simulator;
pub mod solver;
pub mod sources;

pub use error::{Error, Result};
pub use policy::{PolicyRegistry, SamplingPolicy};
pub use service::ServiceTimeDist;
pub use solver::{SolverOptions, SolverResult, WaitingFunction};
pub use sources::{binary_entropy, AgePenalty, MarkovSourceModel};
