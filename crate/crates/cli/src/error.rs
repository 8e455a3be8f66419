use thiserror::Error;

/// Failure classes of a run, each with its own process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Certification(_) => 4,
            Self::Io(_) => 1,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Numeric(_) => "numeric",
            Self::Certification(_) => "certification",
            Self::Io(_) => "io",
        }
    }
}

/// Parameter and naming errors from the core are configuration problems; the
/// rest are numerical.
impl From<landau_core::Error> for RunError {
    fn from(e: landau_core::Error) -> Self {
        use landau_core::Error as E;
        match e {
            E::UnknownName { .. } | E::InvalidParameter { .. } | E::CutoffTooSmall { .. } | E::NegativeDistribution { .. } => {
                Self::Config(e.to_string())
            }
            _ => Self::Numeric(e.to_string()),
        }
    }
}
