use fedosov_core::fedosov::FedosovError;
use fedosov_core::moment::MomentError;
use fedosov_core::transport::TransportError;
use serde_json::{json, Value};

/// Failure classes, each with its own exit code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration.
    #[error("{0}")]
    Config(String),
    /// A request beyond a truncation, parameter or frequency cap.
    #[error("{0}")]
    Cap(String),
    /// The computation ran but an asserted identity failed.
    #[error("{0}")]
    Assertion(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Assertion(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Cap(_) => "cap",
            CliError::Assertion(_) => "assertion",
            CliError::Io(_) => "io",
            CliError::Other(_) => "other",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() } })
    }
}

impl From<FedosovError> for CliError {
    fn from(e: FedosovError) -> Self {
        match e {
            FedosovError::OrderTooLow(_) | FedosovError::Geometry(_) => CliError::Config(e.to_string()),
            FedosovError::NotFlat(_) => CliError::Assertion(e.to_string()),
        }
    }
}

impl From<MomentError> for CliError {
    fn from(e: MomentError) -> Self {
        match e {
            MomentError::Fedosov(inner) => inner.into(),
            MomentError::Geometry(_) => CliError::Config(e.to_string()),
            MomentError::NonzeroMean => CliError::Config(e.to_string()),
            MomentError::OrderTooHigh { .. } | MomentError::Underdetermined { .. } | MomentError::BeyondDensity { .. } => {
                CliError::Cap(e.to_string())
            }
            MomentError::NotFlat(..) | MomentError::Inconsistent { .. } => CliError::Assertion(e.to_string()),
        }
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Moment(inner) => inner.into(),
            TransportError::Fedosov(inner) => inner.into(),
            TransportError::Boundary(_) | TransportError::NonzeroMean | TransportError::GeneratorTooLow(_) => {
                CliError::Config(e.to_string())
            }
            TransportError::CapExceeded | TransportError::OrderTooHigh { .. } => CliError::Cap(e.to_string()),
        }
    }
}
