use thiserror::Error;

pub const EX_NOPATH: u8 = 2;
pub const EX_USAGE: u8 = 64;
pub const EX_DATAERR: u8 = 65;
pub const EX_UNAVAILABLE: u8 = 69;
pub const EX_SOFTWARE: u8 = 70;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("no path: {0}")]
    NoPath(String),
    #[error("{0}")]
    Provider(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NoPath(_) => EX_NOPATH,
            CliError::Usage(_) => EX_USAGE,
            CliError::Input(_) => EX_DATAERR,
            CliError::Provider(_) => EX_UNAVAILABLE,
            CliError::Internal(_) => EX_SOFTWARE,
        }
    }
}

pub fn input(what: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", what.display()))
}

/// Output files that cannot be written are an internal failure, not bad input.
pub fn write(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))
}
