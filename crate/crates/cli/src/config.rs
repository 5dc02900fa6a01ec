//! TOML configuration. Every flag has a field here; flags win, then
//! `PHRI_SEED`, then the file, then built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use phri_core::classifiers::Algorithm;
use phri_core::evaluation::{CvConfig, GridSpec};
use phri_core::features::FeatureMode;
use phri_core::synth::{ClassCounts, ClassTemplates, SynthConfig, TABLE1_COUNTS};

use crate::failure::{CmdResult, Failure};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Overrides `synth.generator.rng_seed` and `cv.seed` when set.
    pub seed: Option<u64>,
    pub synth: SynthSection,
    pub statics: StaticsSection,
    pub features: FeaturesSection,
    pub train: TrainSection,
    pub grid: GridSpec,
    pub cv: CvConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub total: usize,
    /// `table1`, `equal`, or four comma-separated weights.
    pub ratios: String,
    pub generator: SynthConfig,
    pub templates: ClassTemplates,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            total: 1200,
            ratios: "table1".into(),
            generator: SynthConfig::default(),
            templates: ClassTemplates::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticsSection {
    pub diameter_m: f64,
    /// Largest bar compression of the prestress, in newtons.
    pub prestress_n: f64,
}

impl Default for StaticsSection {
    fn default() -> Self {
        Self {
            diameter_m: phri_core::statics::DEFAULT_DIAMETER_M,
            prestress_n: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub window: usize,
    pub stride: Option<usize>,
    pub mode: FeatureMode,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        Self {
            window: 10,
            stride: None,
            mode: FeatureMode::Abstract,
        }
    }
}

/// Model fitted by `train`. Hyperparameters come from `[cv]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub window: usize,
    pub features: FeatureMode,
    pub algorithm: Algorithm,
    /// Balance the training set with SMOTE before fitting.
    pub smote: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            window: 10,
            features: FeatureMode::Abstract,
            algorithm: Algorithm::Rf,
            smote: true,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> CmdResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(anyhow::anyhow!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(anyhow::anyhow!("{}: {e}", path.display())))
    }

    /// Applies the resolved seed to every seeded section.
    pub fn apply_seed(&mut self, flag_or_env: Option<u64>) {
        if let Some(s) = flag_or_env {
            self.seed = Some(s);
        }
        if let Some(s) = self.seed {
            self.synth.generator.rng_seed = s;
            self.cv.seed = s;
        }
    }

    pub fn validate(&self) -> CmdResult {
        self.synth.generator.validate()?;
        self.synth.templates.validate()?;
        self.cv.validate()?;
        parse_ratios(&self.synth.ratios)?;
        Ok(())
    }
}

pub fn parse_ratios(s: &str) -> CmdResult<[usize; 4]> {
    match s.trim() {
        "table1" => Ok(TABLE1_COUNTS),
        "equal" => Ok([1; 4]),
        other => {
            let parts: Vec<&str> = other.split(',').collect();
            let bad = || Failure::usage(anyhow::anyhow!("ratios must be `table1`, `equal` or four weights, got `{other}`"));
            if parts.len() != 4 {
                return Err(bad());
            }
            let mut w = [0usize; 4];
            for (slot, p) in w.iter_mut().zip(parts) {
                *slot = p.trim().parse().map_err(|_| bad())?;
            }
            if w.iter().sum::<usize>() == 0 {
                return Err(bad());
            }
            Ok(w)
        }
    }
}

pub fn class_counts(total: usize, ratios: &str) -> CmdResult<ClassCounts> {
    Ok(ClassCounts::proportional(total, parse_ratios(ratios)?))
}
