use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bank::DEFAULT_GAMMA;
use crate::error::{Result, TfcwError};
use crate::pipeline::PipelineConfig;
use crate::robustness::CorruptionSchedule;

/// Run configuration file: pipeline settings plus dataset paths.
///
/// ```toml
/// train = "data/train.tfcwpts"
/// test = "data/test.tfcwpts"
/// gamma = 100.0
///
/// [pipeline]
/// stages = 4
/// k_per_stage = [24, 24, 24, 24]
/// descriptor = "xyz"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub gamma: f64,
    /// Centre each cloud and scale it into the unit sphere after loading.
    pub normalize: bool,
    pub pipeline: PipelineConfig,
    pub corruption: CorruptionSchedule,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: None,
            test: None,
            gamma: DEFAULT_GAMMA,
            normalize: true,
            pipeline: PipelineConfig::default(),
            corruption: CorruptionSchedule::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| TfcwError::Format(e.to_string()))?;
        cfg.pipeline.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml(&std::fs::read_to_string(path).map_err(TfcwError::at_path(path))?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

/// Hex SHA-256 of the value's canonical JSON (object keys sorted).
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value)
        .and_then(|v| serde_json::to_string(&v))
        .expect("config serialises to JSON");
    hex::encode(Sha256::digest(canonical.as_bytes()).as_slice())
}
