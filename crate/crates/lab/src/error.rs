use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0}")]
    Usage(clap::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("invalid spec: {0}")]
    Invalid(squeezesim_core::Error),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("run failed: {0}")]
    Runtime(#[from] squeezesim_core::Error),

    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub(crate) fn invalid(msg: &str) -> Self {
        LabError::InvalidSpec(msg.to_string())
    }

    /// 0 success, 2 bad input, 3 failure while running or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(e) if !e.use_stderr() => 0,
            LabError::Usage(_) | LabError::Config(_) | LabError::Invalid(_) | LabError::InvalidSpec(_) => 2,
            LabError::Runtime(_) | LabError::Io { .. } => 3,
        }
    }
}
