use std::path::Path;

/// CLI failures and the exit code each maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flag value: exit 1.
    #[error("{flag}: {msg}")]
    Usage { flag: &'static str, msg: String },
    /// Failure tied to a named input or output file.
    #[error("{flag} {path}: {source}")]
    File {
        flag: &'static str,
        path: String,
        source: ssw_core::Error,
    },
    #[error(transparent)]
    Core(#[from] ssw_core::Error),
}

impl CliError {
    pub fn usage(flag: &'static str, msg: impl Into<String>) -> Self {
        CliError::Usage {
            flag,
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage { .. } => 1,
            CliError::File { source, .. } | CliError::Core(source) => {
                if source.is_numeric() {
                    2
                } else {
                    1
                }
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attach the flag and path that produced a core error.
pub trait FileContext<T> {
    fn for_file(self, flag: &'static str, path: &Path) -> CliResult<T>;
}

impl<T> FileContext<T> for ssw_core::Result<T> {
    fn for_file(self, flag: &'static str, path: &Path) -> CliResult<T> {
        self.map_err(|source| CliError::File {
            flag,
            path: path.display().to_string(),
            source,
        })
    }
}
