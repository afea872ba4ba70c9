use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or environment; exit code 1.
    #[error("config error: {0}")]
    Config(String),
    /// A computation or check failed; exit code 2.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<gutz_core::Error> for CliError {
    fn from(e: gutz_core::Error) -> Self {
        use gutz_core::Error as E;
        match e {
            E::InvalidLattice(_) | E::InvalidParameter(_) | E::TooLarge(_) => CliError::Config(e.to_string()),
            E::Io(m) => CliError::Output(std::io::Error::other(m)),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
