use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Record of one command run. `args` is the normalized argument list that
/// `spinweave replay` feeds back through the parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub rng_seed: u64,
    /// Data files written by the run, relative to the output directory.
    pub artifact_paths: Vec<String>,
    pub tool_version: String,
    pub working_directory: String,
    pub args: Vec<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}_manifest.json")
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: invalid manifest: {e}", path.display())))
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<PathBuf> {
        let path = out_dir.join(Self::file_name(&self.command));
        let mut text = serde_json::to_string_pretty(self).expect("manifest values are finite JSON");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Collects artifacts while a command runs, then emits the manifest.
pub struct RunContext {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub args: Vec<String>,
    artifacts: Vec<String>,
}

impl RunContext {
    pub fn new(out_dir: PathBuf, seed: u64, args: Vec<String>) -> CliResult<Self> {
        fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
        Ok(Self {
            out_dir,
            seed,
            args,
            artifacts: Vec::new(),
        })
    }

    pub fn write_artifact(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.artifacts.push(name.to_owned());
        Ok(path)
    }

    pub fn finish(
        self,
        command: &str,
        parameters: BTreeMap<String, Value>,
        extra: BTreeMap<String, Value>,
    ) -> CliResult<PathBuf> {
        let working_directory = std::env::current_dir()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let manifest = RunManifest {
            command: command.to_owned(),
            parameters,
            rng_seed: self.seed,
            artifact_paths: self.artifacts,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            working_directory,
            args: self.args,
            extra,
        };
        manifest.write(&self.out_dir)
    }
}
