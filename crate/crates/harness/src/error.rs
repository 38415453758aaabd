use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Core(uavris_core::Error),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for anything that
    /// failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Core(uavris_core::Error::InvalidConfig { .. }) => 1,
            _ => 2,
        }
    }
}

impl From<uavris_core::Error> for HarnessError {
    fn from(e: uavris_core::Error) -> Self {
        match e {
            uavris_core::Error::InvalidConfig { field, reason } => {
                HarnessError::Config(format!("{field}: {reason}"))
            }
            other => HarnessError::Core(other),
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Runtime(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Runtime(format!("json: {e}"))
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
