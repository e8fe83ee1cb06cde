use std::fmt;

use mctsi_core::mct::io::LoadError;
use mctsi_core::Error;

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;
pub const EXIT_PRECONDITION: u8 = 4;
pub const EXIT_IO: u8 = 5;

/// An error that ends the process with a specific exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    /// JSON pointer into the offending file, for invariant violations.
    pub path: Option<String>,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into(), path: None }
    }

    pub fn precondition(message: impl Into<String>) -> Failure {
        Failure::new(EXIT_PRECONDITION, message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Failure {
        Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
    }

    pub fn kind(&self) -> &'static str {
        match self.code {
            EXIT_CHECK_FAILED => "check_failed",
            EXIT_PARSE => "parse",
            EXIT_INVARIANT => "invariant",
            EXIT_PRECONDITION => "precondition",
            EXIT_IO => "io",
            _ => "error",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::InvalidParameter(_)
            | Error::PreconditionViolated(_)
            | Error::SizeLimit(_)
            | Error::UniquenessViolated(_)
            | Error::NoOp(_) => EXIT_PRECONDITION,
            _ => EXIT_INVARIANT,
        };
        let path = match &e {
            Error::InvalidModel { path, .. } => Some(path.clone()),
            _ => None,
        };
        Failure { code, message: e.to_string(), path }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Failure {
        match e {
            LoadError::Parse(msg) => Failure::new(EXIT_PARSE, format!("parse error: {msg}")),
            LoadError::Invalid(e) => e.into(),
            LoadError::Io { path, reason } => Failure::new(EXIT_IO, format!("cannot read {path}: {reason}")),
        }
    }
}
