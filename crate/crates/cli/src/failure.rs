use std::fmt;

use bcepp_core::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_UNDEFINED_METRIC: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// An error carrying the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(context: impl fmt::Display, e: std::io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("{context}: {e}"),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Divergence { .. } => EXIT_DIVERGENCE,
            Error::UndefinedScore(_) => EXIT_UNDEFINED_METRIC,
            Error::Io(_) => EXIT_IO,
            Error::Domain(_) | Error::Shape(_) | Error::Parse(_) => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Failure {
                code: EXIT_IO,
                message: e.to_string(),
            }
        } else {
            Failure::usage(format!("run manifest: {e}"))
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// `println!` through [`emit`], returning early on a write error.
macro_rules! say {
    ($($t:tt)*) => {
        $crate::failure::emit(&format!("{}\n", format_args!($($t)*)))?
    };
}
pub(crate) use say;

/// Writes to stdout. A closed pipe (e.g. `| head`) is not an error.
pub fn emit(text: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::io("stdout", e)),
        _ => Ok(()),
    }
}
