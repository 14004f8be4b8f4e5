//! Pipeline configuration, read from a sectioned `key = value` (TOML) file.
//! Unknown sections or keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::TrainConfig;
use crate::edge::EdgeConfig;
use crate::error::{Error, Result};
use crate::icwmh::IcwmhConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    /// Training seeds per grid cell.
    pub seeds: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig { seeds: 3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub icwmh: IcwmhConfig,
    pub edge: EdgeConfig,
    pub train: TrainConfig,
    pub ablation: AblationConfig,
    pub io: IoConfig,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.icwmh.validate()?;
        self.edge.validate()?;
        self.train.validate()?;
        if self.ablation.seeds == 0 {
            return Err(Error::InvalidConfig("ablation.seeds must be >= 1".into()));
        }
        Ok(())
    }

    /// Fully resolved config, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `--seed`: the top-level seed and the training seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }
}
