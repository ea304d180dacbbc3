use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_at, CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Record of one run, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// The command's resolved arguments.
    pub config: toml::Table,
}

impl RunManifest {
    pub fn new<A: Serialize>(command: &str, args: &A, seed: Option<u64>) -> CliResult<Self> {
        let config =
            toml::Table::try_from(args).map_err(|e| CliError::Usage(format!("cannot record arguments: {e}")))?;
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always serializable")
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("malformed manifest: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_toml(&io_at(path, std::fs::read_to_string(path))?)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        io_at(path, std::fs::write(path, self.to_toml()))
    }

    /// Arguments of the recorded command.
    pub fn args<A: for<'de> Deserialize<'de>>(&self) -> CliResult<A> {
        self.config
            .clone()
            .try_into()
            .map_err(|e| CliError::Usage(format!("manifest config does not match {:?}: {e}", self.command)))
    }
}
