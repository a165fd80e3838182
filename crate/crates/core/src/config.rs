//! Run configuration: one TOML document with `[augment]`, `[train]`,
//! `[loss]` and `[bench]` tables. Missing keys take their defaults; unknown
//! keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{AppearanceMode, AugmentConfig, CropMode};
use crate::error::{Error, Result};
use crate::harmonizer::{LossWeights, TrainConfig};
use crate::pipeline::{HarmonizeOptions, MaskStyle, DEFAULT_EXPAND};

pub const ECHO_FILE: &str = "resolved_config.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub count: usize,
    pub seed: u64,
    pub mask_style: MaskStyle,
    pub locality: bool,
    pub expand: f64,
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            count: 50,
            seed: 0,
            mask_style: MaskStyle::Rect,
            locality: false,
            expand: DEFAULT_EXPAND,
            workers: 1,
        }
    }
}

impl BenchConfig {
    pub fn harmonize_options(&self) -> HarmonizeOptions {
        HarmonizeOptions {
            locality: self.locality,
            expand: self.expand,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preset {
    /// Full-size crops and the long schedule.
    #[default]
    Paper,
    /// Small crops and 2,000 steps of batch 8.
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(Self::Paper),
            "desk" => Ok(Self::Desk),
            other => Err(format!("unknown preset '{other}' (expected paper or desk)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub augment: AugmentConfig,
    pub train: TrainConfig,
    pub loss: LossWeights,
    pub bench: BenchConfig,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self::default(),
            Preset::Desk => Self {
                augment: AugmentConfig::desk(),
                train: TrainConfig::desk(),
                ..Self::default()
            },
        }
    }

    /// Parses `text` on top of `base`: keys present in the file replace the
    /// base values, absent keys keep them.
    pub fn parse_over(base: &RunConfig, text: &str) -> Result<Self> {
        let overlay: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut merged = toml::Table::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
        for (section, value) in overlay {
            match (merged.get_mut(&section), value) {
                (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => dst.extend(src),
                (_, v) => {
                    merged.insert(section, v);
                }
            }
        }
        let cfg: RunConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_over(&Self::default(), text)
    }

    pub fn load_over(base: &RunConfig, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_over(base, &text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.augment.validate()?;
        self.train.validate()?;
        self.loss.validate()?;
        self.bench.harmonize_options().validate()?;
        for (name, seed) in [("train.seed", self.train.seed), ("bench.seed", self.bench.seed)] {
            if seed > i64::MAX as u64 {
                return Err(Error::Config(format!("{name} must fit in a signed 64-bit integer")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Writes `resolved_config.toml` into `dir`.
    pub fn write_echo(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(ECHO_FILE);
        std::fs::write(&path, self.to_toml()?).map_err(|e| Error::io(&path, e))
    }
}

/// One cell of the ablation matrix: the base configuration with a single
/// component changed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationCell {
    Full,
    SingleCrop,
    ColorTransfer,
    Saturation,
    NoRecon,
    NoDis,
}

impl AblationCell {
    pub const ALL: [AblationCell; 6] = [
        Self::Full,
        Self::SingleCrop,
        Self::ColorTransfer,
        Self::Saturation,
        Self::NoRecon,
        Self::NoDis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::SingleCrop => "single_crop",
            Self::ColorTransfer => "color_transfer",
            Self::Saturation => "saturation",
            Self::NoRecon => "no_recon",
            Self::NoDis => "no_dis",
        }
    }

    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        match self {
            Self::Full => {}
            Self::SingleCrop => cfg.augment.mode = CropMode::SingleCrop,
            Self::ColorTransfer => cfg.augment.appearance = AppearanceMode::ColorTransfer,
            Self::Saturation => cfg.augment.appearance = AppearanceMode::Saturation,
            Self::NoRecon => cfg.loss.w1 = 0.0,
            Self::NoDis => cfg.loss.w2 = 0.0,
        }
        cfg
    }
}

impl std::str::FromStr for AblationCell {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|c| c.name()).collect();
            format!("unknown cell '{s}' (expected one of {})", names.join(", "))
        })
    }
}
