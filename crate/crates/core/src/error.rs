use thiserror::Error;

pub type Result<T> = std::result::Result<T, CocycleError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    /// A matrix along the orbit has |det| below the configured floor.
    #[error("matrix at orbit index {index} is not invertible (det = {det:e})")]
    NonInvertible { index: i64, det: f64 },

    #[error("non-finite value at orbit index {index}: {what}")]
    NonFinite { index: usize, what: String },

    #[error("product overflow at orbit index {index} despite renormalization")]
    Overflow { index: usize },

    /// An iterative solver did not reach its tolerance. Carries the best residual seen.
    #[error("inconclusive: {reason} (residual {residual:e})")]
    Inconclusive { reason: String, residual: f64 },

    #[error("a_theta - c_theta * u_theta(Tx) = {value:e} <= 0 at theta = {theta}: outside the formula window")]
    NonPositiveDenominator { theta: f64, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("anomaly: {0}")]
    Anomaly(String),

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl CocycleError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CocycleError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for CocycleError {
    fn from(e: std::io::Error) -> Self {
        CocycleError::Io(e.to_string())
    }
}
