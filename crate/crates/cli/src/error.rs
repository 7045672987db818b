use thiserror::Error;

/// CLI failure classes; validation maps to exit code 2, runtime to 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("runtime: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<radiomics_core::Error> for CliError {
    fn from(e: radiomics_core::Error) -> Self {
        use radiomics_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::MalformedHeader(_) | E::SizeMismatch { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
