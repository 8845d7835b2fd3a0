//! Run manifests: everything needed to replay a command.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: &'static str,
    pub timestamp_unix: u64,
    pub parameters: Value,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Value) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            parameters,
        }
    }

    pub fn sidecar_path(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    /// One JSON line on stderr, plus `<out>.manifest.json` when writing to a file.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        eprintln!("{}", serde_json::to_string(self)?);
        if let Some(out) = out {
            let path = Self::sidecar_path(out);
            let text = serde_json::to_string_pretty(self)? + "\n";
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}
