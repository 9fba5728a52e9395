use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL: &str = "pixlayout";

/// Resolved command plus the files it produced. `--out` and `--threads` are
/// not recorded: neither changes the contents of any output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: Command, outputs: Vec<String>) -> Self {
        Manifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            outputs,
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        if manifest.tool != TOOL {
            return Err(CliError::Validation(format!(
                "{} was not written by {TOOL}",
                path.display()
            )));
        }
        if matches!(manifest.command, Command::Replay(_)) {
            return Err(CliError::Validation("a manifest cannot record a replay".into()));
        }
        Ok(manifest)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

/// Makes an input path absolute so the manifest can be replayed from any
/// working directory. The file must exist.
pub fn absolute_input(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| CliError::io(path.display(), e))
}
