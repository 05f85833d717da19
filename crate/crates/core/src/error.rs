use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid source model: {0}")]
    InvalidModel(String),

    #[error("invalid age penalty: {0}")]
    InvalidPenalty(String),

    #[error("invalid service-time distribution: {0}")]
    InvalidDistribution(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error(
        "threshold {beta} unreachable for previous service {y_prev} within z_max = {z_max} steps \
         (the penalty may be bounded above below the threshold; raise z_max)"
    )]
    ThresholdUnreachable { y_prev: u64, beta: f64, z_max: u64 },

    #[error("invalid bisection bracket: h({lower}) = {h_lower} < 0")]
    BracketInvalid { lower: f64, h_lower: f64 },

    #[error("oracle enumeration of {candidates} candidates exceeds the budget of {budget}")]
    BudgetExceeded { candidates: u128, budget: u128 },

    #[error("forced service sequence exhausted: sample {needed} requested but only {provided} services given")]
    SequenceExhausted { needed: usize, provided: usize },

    #[error("service time {0} is not in the distribution's support")]
    ServiceNotInSupport(u64),

    #[error("queue length exceeded {limit} waiting samples at step {step}")]
    QueueOverflow { limit: usize, step: u64 },

    #[error("unknown sampling policy `{name}` (known: {known})")]
    UnknownPolicy { name: String, known: String },

    #[error("sampling policy `{policy}` requires parameter `{param}`")]
    MissingParameter { policy: String, param: &'static str },

    #[error("source model `{0}` has no generative dynamics")]
    NoGenerativeModel(&'static str),
}
