use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("{what} not found at {}", path.display())]
    Missing { what: &'static str, path: PathBuf },

    #[error("cannot parse config: {0}")]
    ConfigSyntax(#[from] toml::de::Error),

    #[error("cannot serialize config: {0}")]
    ConfigWrite(#[from] toml::ser::Error),

    #[error(transparent)]
    Core(#[from] xad_core::Error),

    #[error(transparent)]
    Models(#[from] xad_models::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    /// 1 for problems with the request itself, 2 for failures while running it.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Invalid(_) | Error::Missing { .. } | Error::ConfigSyntax(_) => 1,
            _ => 2,
        }
    }
}
