use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("numerical error: {0}")]
    Core(#[from] riot_core::Error),
    #[error("self-test failed: {0}")]
    Check(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Short category printed by the CLI.
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } | HarnessError::Csv(_) => "io",
            HarnessError::Core(_) => "numerical",
            HarnessError::Check(_) => "check",
        }
    }

    /// Process exit status; `2` is left to argument parsing.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 3,
            HarnessError::Io { .. } | HarnessError::Csv(_) => 4,
            HarnessError::Core(_) => 5,
            HarnessError::Check(_) => 6,
        }
    }
}
