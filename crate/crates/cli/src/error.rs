use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Rejected(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Rejected(_) => 1,
        }
    }
}

impl From<dicert::Error> for CliError {
    fn from(e: dicert::Error) -> Self {
        use dicert::Error as E;
        let msg = e.to_string();
        match e {
            E::Infeasible(_) | E::Unbounded { .. } => CliError::Infeasible(msg),
            E::Solver(_) | E::Soundness(_) => CliError::Solver(msg),
            _ => CliError::Config(msg),
        }
    }
}
