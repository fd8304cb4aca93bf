//! Run manifests: what produced an output directory, enough to rerun it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{self, CliError, Result};
use crate::json::to_text;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Effective options of the command.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> RunManifest {
        RunManifest {
            command: command.into(),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Writes `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.write_to(&dir.join(MANIFEST_FILE))
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        error::write(path, to_text(self))
    }

    pub fn read(path: &Path) -> Result<RunManifest> {
        let text = error::read_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))
    }
}
