use sllab_core::{AbortDiagnostic, Error as CoreError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical abort at step {} (t = {}): {}", .0.step, .0.t, .0.reason)]
    Numeric(AbortDiagnostic),
    #[error("assertion failed: {}", .0.join("; "))]
    Assertion(Vec<String>),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Core(CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Assertion(_) => 4,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidGrid(_)
            | CoreError::InvalidParams(_)
            | CoreError::InvalidInput(_)
            | CoreError::UnsupportedOrder(_)
            | CoreError::CombinatorialGuard { .. }
            | CoreError::Json(_) => CliError::Config(e.to_string()),
            CoreError::NumericalAbort(d) => CliError::Numeric(d),
            CoreError::DegeneratePhase { node_fraction } => CliError::Numeric(AbortDiagnostic {
                step: 0,
                t: 0.0,
                norm_drift: 0.0,
                reason: format!("degenerate phase, node fraction {node_fraction:.3}"),
            }),
            CoreError::BranchOverlap { .. } => CliError::Assertion(vec![e.to_string()]),
            CoreError::Io(io) => CliError::Io(io),
            other => CliError::Core(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let abort = AbortDiagnostic { step: 3, t: 0.003, norm_drift: 1e-3, reason: "norm".into() };
        assert_eq!(CliError::from(CoreError::NumericalAbort(abort)).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::DegeneratePhase { node_fraction: 0.9 }).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::InvalidInput("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::UnsupportedOrder(3)).exit_code(), 2);
        assert_eq!(CliError::Assertion(vec!["a".into()]).exit_code(), 4);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::from(CoreError::Io(io)).exit_code(), 1);
    }
}
