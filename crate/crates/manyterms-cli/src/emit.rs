use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Writes `text` to `out` when given, otherwise to stdout. All data output
/// goes through here so diagnostics can stay on stderr.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(format!("cannot write to stdout: {e}"))),
    }
}
