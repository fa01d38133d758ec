use std::path::Path;

use serde::{Deserialize, Serialize};

/// Run ledger written next to the artifacts.  Re-running with the same
/// configs reproduces every numeric output byte-identically; `runtime_ms`
/// is the only field that may differ.
#[derive(Debug, Serialize, Deserialize, Default)]
pub struct RunManifest {
    pub version: String,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub runtime_ms: u64,
}

impl RunManifest {
    pub fn load_or_new(dir: &Path) -> Self {
        let path = dir.join("manifest.json");
        std::fs::read_to_string(&path)
            .ok()
            .and_then(|text| serde_json::from_str(&text).ok())
            .unwrap_or_else(|| RunManifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                entries: Vec::new(),
            })
    }

    pub fn record(&mut self, entry: ManifestEntry) {
        // One entry per (experiment, config hash): reruns replace.
        self.entries
            .retain(|e| !(e.experiment == entry.experiment && e.config_hash == entry.config_hash));
        self.entries.push(entry);
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        let path = dir.join("manifest.json");
        std::fs::write(path, serde_json::to_string_pretty(self).unwrap())
    }
}
