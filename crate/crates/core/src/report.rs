//! Experiment outputs: fitted statistics with confidence intervals, plus the
//! reproducibility envelope (seed, config hash, artifact version).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One statistic at one abscissa (a level k, an exponent r, a threshold t…).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatPoint {
    pub abscissa: f64,
    pub statistic: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_samples: u64,
}

/// Result of one experiment: raw statistic rows, the fitted model and its
/// constants, and everything needed to reproduce the run.
///
/// `runtime_ms` is the only field excluded from reproducibility comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub experiment: String,
    pub model: Option<String>,
    pub points: Vec<StatPoint>,
    pub constants: BTreeMap<String, f64>,
    pub r_squared: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
    pub notes: Vec<String>,
    pub runtime_ms: u64,
}

impl FitReport {
    pub fn new(experiment: impl Into<String>, seed: u64, config_hash: String) -> Self {
        Self {
            experiment: experiment.into(),
            model: None,
            points: Vec::new(),
            constants: BTreeMap::new(),
            r_squared: None,
            seed,
            config_hash,
            version: ARTIFACT_VERSION.to_string(),
            notes: Vec::new(),
            runtime_ms: 0,
        }
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    /// Equality of every numeric field except the wall-clock timing.
    pub fn numerically_equal(&self, other: &FitReport) -> bool {
        self.experiment == other.experiment
            && self.model == other.model
            && self.points == other.points
            && self.constants == other.constants
            && self.r_squared == other.r_squared
            && self.seed == other.seed
            && self.config_hash == other.config_hash
            && self.version == other.version
            && self.notes == other.notes
    }
}

/// Canonical JSON: object keys sorted recursively, no whitespace.  Hashing
/// this makes the config hash stable under key reordering.
pub fn canonical_json(value: &serde_json::Value) -> String {
    fn write(value: &serde_json::Value, out: &mut String) {
        match value {
            serde_json::Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                out.push('{');
                for (i, k) in keys.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push(':');
                    write(&map[*k], out);
                }
                out.push('}');
            }
            serde_json::Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write(item, out);
                }
                out.push(']');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let mut out = String::new();
    write(value, &mut out);
    out
}

/// SHA-256 of the canonical JSON form, as lowercase hex.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("config serialization cannot fail");
    let canon = canonical_json(&value);
    let digest = Sha256::digest(canon.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(hex, "{byte:02x}").unwrap();
    }
    hex
}
