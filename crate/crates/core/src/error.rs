use thiserror::Error;

/// Errors produced anywhere in the simulator or the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid vehicle state: {0}")]
    InvalidState(String),

    #[error("plant diverged at t = {time:.3} s: {reason}")]
    Diverged { time: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("singular design matrix; collinear terms: {}", .terms.join(", "))]
    SingularDesign { terms: Vec<String> },

    #[error("Mallows Cp is undefined: {0}")]
    UndefinedCp(String),

    #[error("no interior optimum: {0}")]
    NoInteriorOptimum(String),
}

impl Error {
    /// True for errors caused by bad input or configuration, as opposed to
    /// numerical failures of an otherwise valid computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Argument(_)
                | Error::InsufficientData(_)
                | Error::SingularDesign { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
