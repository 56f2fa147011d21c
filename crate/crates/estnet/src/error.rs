use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}:{line}: {message}", file.display())]
    Data { file: PathBuf, line: u64, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid state: {0}")]
    State(String),
    #[error(transparent)]
    Core(#[from] estnet_core::Error),
}

impl Error {
    pub(crate) fn data(file: &std::path::Path, line: u64, message: impl Into<String>) -> Self {
        Error::Data { file: file.to_path_buf(), line, message: message.into() }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn csv(path: &std::path::Path, source: csv::Error) -> Self {
        Error::Csv { path: path.to_path_buf(), source }
    }

    /// 1 for configuration and usage problems, 2 for bad or unreadable data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Core(estnet_core::Error::Config(_)) => 1,
            Error::Json { .. } => 1,
            _ => 2,
        }
    }
}
