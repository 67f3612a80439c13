use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A cutoff that did not settle, a size guard, or a method whose
    /// preconditions fail for the chosen environment.
    #[error("convergence or guard failure: {0}")]
    Guard(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Guard(_) => 3,
            Self::Io(_) | Self::Numerical(_) => 1,
        }
    }
}

impl From<mpscoll::Error> for CliError {
    fn from(e: mpscoll::Error) -> Self {
        use mpscoll::Error as E;
        match e {
            E::CutoffNotConverged { .. } | E::SizeGuard(_) | E::InfiniteCorrelationLength(_) | E::NotHomogeneous => {
                Self::Guard(e.to_string())
            }
            E::MissingHamiltonian | E::InvalidArgument(_) | E::DimensionMismatch(_) | E::SiteOutOfRange { .. } => {
                Self::Config(e.to_string())
            }
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
