use manyterms::Error;

/// Command failure with a stable exit code: 2 for input and configuration
/// problems, 3 for numerical failures, 4 for internal errors.
#[derive(Debug)]
pub enum CliError {
    /// Malformed data, flags, or config file (exit 2).
    Parse(String),
    /// The estimator hit a numerically degenerate problem (exit 3).
    Numerical(String),
    /// Unexpected internal failure (exit 4).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Numerical(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::Config(_) => CliError::Parse(err.to_string()),
            Error::RankDeficient { .. }
            | Error::SingularGamma
            | Error::SingularDesign
            | Error::NonpositiveVariance(_) => CliError::Numerical(err.to_string()),
            Error::Dimension(_) | Error::SupportTooLarge(..) | Error::OracleUnavailable(_) => {
                CliError::Internal(err.to_string())
            }
        }
    }
}
