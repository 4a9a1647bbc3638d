//! CLI error taxonomy with stable exit codes: 0 ok, 2 configuration,
//! 3 input parsing, 4 numerical failure, 1 anything else.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error{}: {message}", location(.line, .byte_offset))]
    Parse {
        line: Option<u64>,
        byte_offset: Option<u64>,
        message: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

fn location(line: &Option<u64>, byte_offset: &Option<u64>) -> String {
    match (line, byte_offset) {
        (Some(l), Some(o)) => format!(" at line {l} (byte offset {o})"),
        (Some(l), None) => format!(" at line {l}"),
        _ => String::new(),
    }
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse { .. } => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<rtlrank_core::Error> for CliError {
    fn from(err: rtlrank_core::Error) -> Self {
        match err {
            rtlrank_core::Error::Numerical { .. } => CliError::Numerical(err.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
