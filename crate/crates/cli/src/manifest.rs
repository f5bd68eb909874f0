use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::failure::{emit, CliResult, Failure};

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// Record of one command invocation. `config` holds every option with
/// defaults filled in, keyed by long flag name, so the run can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub started: String,
    pub finished: Option<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    /// Argument vector that re-runs this command.
    pub fn replay_args(&self, out: Option<&Path>) -> Vec<String> {
        let mut args = vec!["bcepp".to_string(), self.command.clone()];
        for (k, v) in &self.config {
            let v = match (k.as_str(), out) {
                ("out", Some(o)) => o.display().to_string(),
                _ => v.clone(),
            };
            args.push(format!("--{k}"));
            args.push(v);
        }
        args
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path.display(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One command run: collects outputs and writes the manifest at the end.
pub struct Run {
    manifest: RunManifest,
    out: Option<PathBuf>,
}

impl Run {
    pub fn new(command: &str, seed: Option<u64>, out: Option<&Path>) -> Self {
        Run {
            manifest: RunManifest {
                command: command.to_string(),
                version: bcepp_core::VERSION.to_string(),
                seed,
                config: BTreeMap::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                started: now(),
                finished: None,
            },
            out: out.map(Path::to_path_buf),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.manifest
            .config
            .insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.manifest.inputs.push(path.display().to_string());
        self
    }

    pub fn print_manifest(&self) -> CliResult<()> {
        emit(&(serde_json::to_string_pretty(&self.manifest)? + "\n"))
    }

    pub fn out_dir(&self) -> CliResult<&Path> {
        let dir = self
            .out
            .as_deref()
            .ok_or_else(|| Failure::usage("no output directory"))?;
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir.display(), e))?;
        Ok(dir)
    }

    pub fn record_output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    /// Writes `contents` to `name` inside the output directory.
    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.out_dir()?.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::io(path.display(), e))?;
        self.record_output(&path);
        Ok(path)
    }

    pub fn finish(mut self) -> CliResult<()> {
        let Some(dir) = self.out.clone() else {
            return Ok(());
        };
        self.manifest.finished = Some(now());
        let path = dir.join(RUN_MANIFEST_FILE);
        std::fs::create_dir_all(&dir).map_err(|e| Failure::io(dir.display(), e))?;
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        std::fs::write(&path, text).map_err(|e| Failure::io(path.display(), e))
    }
}
