use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::args::Command;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Written into every output directory. `command` holds every resolved
/// flag, so `ssw rerun` can replay the run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub command: Command,
    pub threads: usize,
    pub seed: Option<u64>,
    /// Files written by the run, relative to the output directory.
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> ssw_core::Result<()> {
        let file = std::fs::File::create(dir.join(MANIFEST_FILE))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> ssw_core::Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}
