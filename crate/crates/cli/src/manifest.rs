use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::Failure;

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// One per run, written last into the output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub args: Vec<String>,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str, args: Vec<String>) -> Self {
        RunManifest {
            schema_version: longrun::io::SCHEMA_VERSION,
            command: command.into(),
            args,
            config: BTreeMap::new(),
            seed: None,
            versions: BTreeMap::from([("longrun".into(), env!("CARGO_PKG_VERSION").into())]),
            outputs: Vec::new(),
            wall_time_seconds: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.into(), value.to_string());
    }

    pub fn outputs(&mut self, base: &Path, files: impl IntoIterator<Item = PathBuf>) {
        for f in files {
            let rel = f.strip_prefix(base).unwrap_or(&f);
            self.outputs.push(rel.display().to_string());
        }
    }

    /// Writes the manifest into `dir`, or next to `dir` when it is a file.
    pub fn finish(mut self, dir: &Path) -> Result<(), Failure> {
        self.wall_time_seconds = self.started.map_or(0.0, |s| s.elapsed().as_secs_f64());
        let path = dir.join(RUN_MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).expect("serializable") + "\n";
        std::fs::write(&path, text).map_err(|e| Failure {
            code: 4,
            message: format!("I/O error on {}: {e}", path.display()),
        })
    }
}
