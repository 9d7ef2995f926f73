use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] zetablocks::Error),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("output: {0}")]
    Csv(#[from] csv::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 ok, 1 usage, 2 validation, 3 oracle or evaluation failure, 4 verification failure.
    pub fn exit_code(&self) -> i32 {
        use zetablocks::Error as E;
        match self {
            CliError::Usage(_) | CliError::Csv(_) | CliError::Io(_) | CliError::Json(_) => 1,
            CliError::Engine(E::Domain(_) | E::Parameter(_) | E::Validation(_) | E::Table { .. }) => 2,
            CliError::Engine(E::Consistency(_)) | CliError::Oracle(_) => 3,
            CliError::Verify(_) => 4,
        }
    }
}
