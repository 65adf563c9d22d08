use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}line {line}: {message}", file_prefix(.file))]
    Parse { file: Option<PathBuf>, line: usize, message: String },

    #[error("environment variable {var}: {message}")]
    Env { var: String, message: String },

    #[error("invalid experiment:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{context}: {source}")]
    Simulation {
        context: String,
        #[source]
        source: ebcnf_core::Error,
    },

    #[error("{0}")]
    Usage(String),
}

fn file_prefix(file: &Option<PathBuf>) -> String {
    file.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default()
}

impl CliError {
    pub(crate) fn parse(line: usize, message: String) -> Self {
        CliError::Parse { file: None, line, message }
    }

    /// Attaches the configuration path to a parse diagnostic.
    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Parse { file: None, line, message } => {
                CliError::Parse { file: Some(path.to_path_buf()), line, message }
            }
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
