use serde::{Deserialize, Serialize};

use crate::descriptors::DescriptorKind;
use crate::error::{Result, TfcwError};
use crate::geometry::StartRule;
use crate::tfcw::{GramVariant, Pooling, TfcwParams, DEFAULT_EPS};

/// Every tunable of the encoders. Serialises to and from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub stages: usize,
    pub k_per_stage: Vec<usize>,
    pub alpha: f64,
    pub pooling: Pooling,
    pub descriptor: DescriptorKind,
    pub interp_k: usize,
    pub seed: u64,
    pub start: StartRule,
    pub variant: GramVariant,
    pub std_normalize: bool,
    /// Neighbourhood size for normal estimation when a cloud has none.
    pub k_normal: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: 4,
            k_per_stage: vec![24; 4],
            alpha: 1.0,
            pooling: Pooling::Max,
            descriptor: DescriptorKind::Xyz,
            interp_k: 3,
            seed: 0,
            start: StartRule::CanonicalFarthestFromCentroid,
            variant: GramVariant::TfcwFull,
            std_normalize: true,
            k_normal: 16,
        }
    }
}

impl PipelineConfig {
    pub fn with_uniform_k(mut self, k: usize) -> Self {
        self.k_per_stage = vec![k; self.stages];
        self
    }

    pub fn with_stages(mut self, stages: usize) -> Self {
        let k = self.k_per_stage.first().copied().unwrap_or(24);
        self.stages = stages;
        self.k_per_stage.resize(stages, k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(TfcwError::arg("stages must be at least 1"));
        }
        if self.k_per_stage.len() != self.stages {
            return Err(TfcwError::arg(format!(
                "k_per_stage has {} entries for {} stages",
                self.k_per_stage.len(),
                self.stages
            )));
        }
        if let Some(k) = self.k_per_stage.iter().find(|&&k| k < 2) {
            return Err(TfcwError::arg(format!("every stage needs k >= 2, got {k}")));
        }
        if self.descriptor == DescriptorKind::Risp && self.k_per_stage.iter().any(|&k| k < 3) {
            return Err(TfcwError::arg("RISP stages need k >= 3"));
        }
        if self.interp_k == 0 {
            return Err(TfcwError::arg("interp_k must be at least 1"));
        }
        if self.k_normal < 3 {
            return Err(TfcwError::arg("k_normal must be at least 3"));
        }
        if !self.alpha.is_finite() {
            return Err(TfcwError::arg("alpha must be finite"));
        }
        Ok(())
    }

    pub fn tfcw_params(&self) -> TfcwParams {
        TfcwParams {
            alpha: self.alpha,
            pooling: self.pooling,
            variant: self.variant,
            std_normalize: self.std_normalize,
            eps: DEFAULT_EPS,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| TfcwError::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }
}
