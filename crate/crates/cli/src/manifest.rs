use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use mdpde_core::SolverOptions;

#[derive(Debug, Clone, Serialize)]
pub struct DatasetRef {
    pub name: String,
    pub sha256: String,
}

/// Provenance of one run. The timestamp is the only field that changes
/// between identical invocations.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    pub dataset: Option<DatasetRef>,
    pub solver: Option<SolverOptions>,
    pub seed: Option<u64>,
    pub threads: Option<String>,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new() -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            dataset: None,
            solver: None,
            seed: None,
            threads: std::env::var(mdpde_core::exec::THREADS_ENV).ok(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }

    pub fn with_dataset(mut self, d: Option<DatasetRef>) -> Self {
        self.dataset = d;
        self
    }

    pub fn with_solver(mut self, s: &SolverOptions) -> Self {
        self.solver = Some(s.clone());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Writes `<path>.manifest.json` next to an output file.
    pub fn write_beside(&self, path: &Path) -> std::io::Result<PathBuf> {
        let mut name = path.as_os_str().to_owned();
        name.push(".manifest.json");
        let target = PathBuf::from(name);
        std::fs::write(&target, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(target)
    }
}
