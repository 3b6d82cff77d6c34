//! Harness-level errors: everything that can go wrong outside the numerics
//! (I/O, parsing, configuration) plus propagated core errors.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Numerical or invariant failure inside the core crate.
    Core(consumax_core::Error),
    Io(std::io::Error),
    /// Malformed configuration file (syntax or types).
    Parse(String),
    /// Valid syntax but hypothesis violations; one entry per violated
    /// condition, each naming the condition mathematically.
    Config(Vec<String>),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Parse(msg) => write!(f, "config parse error: {msg}"),
            CliError::Config(violations) => {
                writeln!(f, "configuration violates the standing hypotheses:")?;
                for v in violations {
                    writeln!(f, "  - {v}")?;
                }
                write!(
                    f,
                    "(pass --allow-outside-hypotheses to run anyway, labeled exploratory)"
                )
            }
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Core(e) => Some(e),
            CliError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<consumax_core::Error> for CliError {
    fn from(e: consumax_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
