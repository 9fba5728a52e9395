use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Validation(String),
    Tolerance(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Internal(_) => 1,
        }
    }

    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Tolerance(m) => write!(f, "tolerance exceeded: {m}"),
            CliError::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pixlayout::Error> for CliError {
    fn from(e: pixlayout::Error) -> Self {
        use pixlayout::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { .. } | E::Format { .. } | E::UnsupportedBitDepth(_) | E::Json(_) => CliError::Io(msg),
            E::OutsideDomain(..)
            | E::InvalidParameter(_)
            | E::IndexOutOfRange { .. }
            | E::ShapeMismatch { .. }
            | E::CollapsedPixel(_)
            | E::DegenerateTangent(_)
            | E::NonFinite(_) => CliError::Validation(msg),
            _ => CliError::Internal(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
