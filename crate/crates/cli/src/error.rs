use std::path::PathBuf;

use thiserror::Error;

/// Every failure the binary can report. Rendered as one line,
/// `error[CODE]: message`, on stderr.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}:{line}:{col}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("{0}")]
    Config(String),

    #[error("layer {layer}: {source}")]
    Sim {
        layer: String,
        source: cfsim_core::Error,
    },

    #[error("{failed} of {total} checks disagree with the reference convolution")]
    Mismatch { failed: usize, total: usize },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "E_USAGE",
            CliError::Io { .. } => "E_IO",
            CliError::Parse { .. } => "E_PARSE",
            CliError::Config(_) => "E_CONFIG",
            CliError::Sim { source, .. } => match source {
                cfsim_core::Error::Capacity { .. } => "E_CAPACITY",
                _ => "E_SIM",
            },
            CliError::Mismatch { .. } => "E_MISMATCH",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse { .. } => 4,
            CliError::Config(_) => 5,
            CliError::Sim { .. } => 6,
            CliError::Mismatch { .. } => 7,
        }
    }

    /// The single diagnostic line printed before exiting.
    pub fn render(&self) -> String {
        let msg: String = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[{}]: {msg}", self.code())
    }

    pub(crate) fn sim(layer: &str, source: cfsim_core::Error) -> Self {
        CliError::Sim {
            layer: layer.to_string(),
            source,
        }
    }
}
