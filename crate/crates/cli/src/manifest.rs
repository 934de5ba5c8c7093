use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design_io::write_text;
use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// JSON sidecar describing a run. `config` is the fully resolved
/// configuration (designs inlined), enough to replay the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub artifact_paths: Vec<String>,
    pub tool_version: String,
}

/// `out` with its extension replaced by `suffix` (e.g. `manifest.json`).
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

pub fn write_manifest<C: Serialize>(out: &Path, command: &str, config: &C, artifacts: &[PathBuf]) -> CliResult<PathBuf> {
    let path = sidecar(out, "manifest.json");
    let manifest = RunManifest {
        command: command.into(),
        config: serde_json::to_value(config)?,
        artifact_paths: artifacts.iter().map(|p| p.display().to_string()).collect(),
        tool_version: TOOL_VERSION.into(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_text(&path, &text)?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}
