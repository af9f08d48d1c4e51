use mixlaw_core::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mixlaw_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("cannot read `{path}`: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("cannot write `{path}`: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => ErrorKind::Validation,
            CliError::Read { .. } | CliError::Write { .. } => ErrorKind::Io,
            CliError::Csv(e) if e.is_io_error() => ErrorKind::Io,
            CliError::Csv(_) | CliError::Json(_) => ErrorKind::Validation,
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.kind())
    }

    /// `error[<kind>]: <message>` on a single line.
    pub fn render(&self) -> String {
        let message = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", kind_label(self.kind()), message)
    }
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Validation => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

pub fn kind_label(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Validation => "validation",
        ErrorKind::Numerical => "numerical",
        ErrorKind::Io => "io",
    }
}

pub type CliResult<T> = Result<T, CliError>;
