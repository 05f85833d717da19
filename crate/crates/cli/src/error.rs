use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{field}: {source}")]
    Field { field: String, source: infofresh::Error },
    #[error(transparent)]
    Model(#[from] infofresh::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("solver and oracle disagree by {max_deviation:e} (> {tolerance:e}); worst instance: {worst}")]
    OracleMismatch { max_deviation: f64, tolerance: f64, worst: String },
}

impl CliError {
    /// 1 for invalid input, 2 for failures while running a valid request.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config { .. } | Self::Field { .. } => 1,
            Self::Model(_) | Self::Io { .. } | Self::OracleMismatch { .. } => 2,
        }
    }

    pub fn hint(&self) -> Option<&'static str> {
        match self {
            Self::Model(infofresh::Error::ThresholdUnreachable { .. }) => Some(
                "the expected penalty never reaches the threshold within z_max; raise --zmax or use a penalty that keeps growing",
            ),
            Self::Model(infofresh::Error::SequenceExhausted { .. }) => {
                Some("provide more forced service times or shorten the horizon")
            }
            Self::Model(infofresh::Error::BudgetExceeded { .. }) => {
                Some("lower oracle.z_cap or use smaller service supports")
            }
            _ => None,
        }
    }
}
