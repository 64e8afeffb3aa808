use std::path::{Path, PathBuf};

use coupled_consensus::Error as CoreError;
use thiserror::Error;

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for a negative verdict or a numerical failure on valid input.
pub const EXIT_NEGATIVE: i32 = 1;
/// Exit status for malformed input or usage errors.
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: cannot read: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}{}: {source}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Invalid {
        path: PathBuf,
        /// Line of the first occurrence of the offending key, when found.
        line: Option<usize>,
        #[source]
        source: CoreError,
    },

    #[error("{}: cannot write: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// Attaches a source line to a validation failure by looking up the
    /// top-level key of the offending field (`coupling.adjacency[0][1]` →
    /// `"adjacency"`).
    pub fn invalid(path: &Path, source_text: &str, error: CoreError) -> Self {
        let field = match &error {
            CoreError::Validation { field, .. } => Some(field.as_str()),
            CoreError::Dimension { what, .. } => Some(what.as_str()),
            _ => None,
        };
        let line = field.and_then(|f| locate_key(source_text, f));
        CliError::Invalid {
            path: path.to_path_buf(),
            line,
            source: error,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Invalid { .. } | CliError::Usage(_) => {
                EXIT_INVALID
            }
            CliError::Write { .. } => EXIT_NEGATIVE,
            CliError::Core(e) if e.is_input_error() => EXIT_INVALID,
            CliError::Core(_) => EXIT_NEGATIVE,
        }
    }
}

/// 1-based line of the most specific key of a dotted field path.
fn locate_key(text: &str, field: &str) -> Option<usize> {
    let keys: Vec<&str> = field
        .split(['.', ' '])
        .map(|k| k.split('[').next().unwrap_or(k))
        .filter(|k| !k.is_empty())
        .collect();
    keys.iter().rev().find_map(|key| {
        let quoted = format!("\"{key}\"");
        text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_lookup() {
        let text = "{\n  \"plant\": {\n    \"a\": [[1]]\n  },\n  \"adjacency\": []\n}";
        assert_eq!(locate_key(text, "adjacency[0][1]"), Some(5));
        assert_eq!(locate_key(text, "plant.a[1] columns"), Some(3));
        assert_eq!(locate_key(text, "missing"), None);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_INVALID);
        assert_eq!(CliError::Core(CoreError::Synthesis("x".into())).exit_code(), EXIT_NEGATIVE);
        assert_eq!(CliError::Core(CoreError::Precondition("x".into())).exit_code(), EXIT_INVALID);
    }
}
