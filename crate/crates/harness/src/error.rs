use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] pairgossip::Error),

    /// Malformed configuration file or option value.
    #[error("config error: {0}")]
    Config(String),

    #[error("data error in {path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("trial with seed {seed} failed: {source}")]
    Trial {
        seed: u64,
        #[source]
        source: Box<HarnessError>,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Data { path: path.into(), message: message.into() }
    }

    /// Process exit code: 2 for parameter-type errors, 3 for data errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use pairgossip::Error as E;
        match self {
            Self::Core(E::Parameter(_) | E::Precondition(_) | E::Shape(_) | E::Combinatorial(_)) => 2,
            Self::Core(E::Data(_)) => 3,
            Self::Core(E::Numeric(_)) => 1,
            Self::Config(_) => 2,
            Self::Data { .. } => 3,
            Self::Io { .. } | Self::Csv(_) => 1,
            Self::Trial { source, .. } => source.exit_code(),
        }
    }
}

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(HarnessError::Config(msg.into()))
}
