//! TOML run configuration.
//!
//! ```toml
//! [match]
//! lr_block = 8
//! ref_block_scale = 1.5      # or "full"
//! patch = 3
//! dilations = [1, 2]
//! scales = [1, 2, 4]
//!
//! [encoder]
//! mode = "identity-rgb"      # identity-rgb | filter-bank | loaded
//! # weights = "encoder.rswt"
//!
//! [predictor]
//! mode = "zero"              # zero | seeded-linear | loaded
//! seed = 42
//!
//! [dram]
//! mode = "fixed-default"     # fixed-default | seeded | loaded
//! seed = 7
//! ref_branch = true
//! lr_branch = true
//!
//! [run]
//! upscale = 4
//! workers = 0                # 0: one per core
//! out = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adaptation::ParamPredictor;
use crate::error::{Error, Result};
use crate::feature::EncoderSpec;
use crate::fusion::DramWeights;
use crate::matching::MatchConfig;

pub const UPSCALE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderMode {
    IdentityRgb,
    FilterBank,
    Loaded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub mode: EncoderMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            mode: EncoderMode::IdentityRgb,
            weights: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorMode {
    Zero,
    SeededLinear,
    Loaded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub mode: PredictorMode,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            mode: PredictorMode::Zero,
            seed: 42,
            weights: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DramModeConfig {
    FixedDefault,
    Seeded,
    Loaded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DramConfig {
    pub mode: DramModeConfig,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
    pub ref_branch: bool,
    pub lr_branch: bool,
}

impl Default for DramConfig {
    fn default() -> Self {
        Self {
            mode: DramModeConfig::FixedDefault,
            seed: 7,
            weights: None,
            ref_branch: true,
            lr_branch: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub upscale: usize,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            upscale: UPSCALE,
            workers: 0,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(rename = "match")]
    pub matching: MatchConfig,
    pub encoder: EncoderConfig,
    pub predictor: PredictorConfig,
    pub dram: DramConfig,
    pub run: RunConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.matching.validate()?;
        if self.run.upscale != UPSCALE {
            return Err(Error::config(format!(
                "upscale must be {UPSCALE}, got {}",
                self.run.upscale
            )));
        }
        let loaded = |mode_loaded: bool, w: &Option<PathBuf>, what: &str| {
            if mode_loaded && w.is_none() {
                Err(Error::config(format!(
                    "{what} mode 'loaded' needs a weights path"
                )))
            } else {
                Ok(())
            }
        };
        loaded(
            self.encoder.mode == EncoderMode::Loaded,
            &self.encoder.weights,
            "encoder",
        )?;
        loaded(
            self.predictor.mode == PredictorMode::Loaded,
            &self.predictor.weights,
            "predictor",
        )?;
        loaded(
            self.dram.mode == DramModeConfig::Loaded,
            &self.dram.weights,
            "dram",
        )?;
        Ok(())
    }

    pub fn encoder_spec(&self) -> Result<EncoderSpec> {
        Ok(match self.encoder.mode {
            EncoderMode::IdentityRgb => EncoderSpec::IdentityRgb,
            EncoderMode::FilterBank => EncoderSpec::FilterBank,
            EncoderMode::Loaded => EncoderSpec::load(weights_path(&self.encoder.weights)?)?,
        })
    }

    pub fn predictor(&self, channels: usize) -> Result<ParamPredictor> {
        Ok(match self.predictor.mode {
            PredictorMode::Zero => ParamPredictor::Zero,
            PredictorMode::SeededLinear => ParamPredictor::seeded(channels, self.predictor.seed),
            PredictorMode::Loaded => ParamPredictor::load(weights_path(&self.predictor.weights)?)?,
        })
    }

    pub fn dram_weights(&self, channels: usize) -> Result<DramWeights> {
        let mut w = match self.dram.mode {
            DramModeConfig::FixedDefault => DramWeights::fixed_default(channels),
            DramModeConfig::Seeded => DramWeights::seeded(channels, self.dram.seed),
            DramModeConfig::Loaded => DramWeights::load(weights_path(&self.dram.weights)?)?,
        };
        if w.channels() != channels {
            return Err(Error::shape(format!(
                "DRAM weights have {} channels, encoder produces {channels}",
                w.channels()
            )));
        }
        w.ref_branch = self.dram.ref_branch;
        w.lr_branch = self.dram.lr_branch;
        Ok(w)
    }
}

fn weights_path(p: &Option<PathBuf>) -> Result<&Path> {
    p.as_deref()
        .ok_or_else(|| Error::config("missing weights path"))
}
