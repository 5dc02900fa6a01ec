//! Four-class probabilistic classifiers and the serialized model document.

pub mod forest;
pub mod knn;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::InteractionClass;
use crate::error::{PhriError, Result};
use crate::features::{FeatureLayout, FeatureMode, FeatureVector, MinMaxScaler};

pub use forest::{fit_forest, DecisionTree, ForestModel, ForestParams, MaxFeatures, TreeNode};
pub use knn::{knn_fit, KnnModel, DEFAULT_KNN_K};

/// Class-probability vector indexed by `InteractionClass::index`.
pub type Proba = [f64; InteractionClass::COUNT];

pub const PROBA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Knn,
    Rf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Knn, Algorithm::Rf];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::Rf => "rf",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = PhriError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(Algorithm::Knn),
            "rf" | "forest" | "random-forest" => Ok(Algorithm::Rf),
            other => Err(PhriError::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Checks that `p` is a distribution within `PROBA_TOLERANCE`.
pub fn check_proba(p: &[f64]) -> Result<()> {
    if p.len() != InteractionClass::COUNT {
        return Err(PhriError::DimensionMismatch {
            expected: InteractionClass::COUNT,
            got: p.len(),
        });
    }
    if p.iter().any(|v| !v.is_finite() || *v < -PROBA_TOLERANCE) {
        return Err(PhriError::InvalidDistribution(format!("{p:?} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROBA_TOLERANCE {
        return Err(PhriError::InvalidDistribution(format!("{p:?} sums to {sum}")));
    }
    Ok(())
}

/// Argmax of a class distribution; ties go to the lowest class encoding.
pub fn predict_label(p: &[f64]) -> Result<InteractionClass> {
    check_proba(p)?;
    let mut best = 0;
    for i in 1..p.len() {
        if p[i] > p[best] {
            best = i;
        }
    }
    Ok(InteractionClass::from_index(best).expect("index below class count"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Knn(KnnModel),
    Rf(ForestModel),
}

impl Classifier {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Classifier::Knn(_) => Algorithm::Knn,
            Classifier::Rf(_) => Algorithm::Rf,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Classifier::Knn(m) => m.n_features(),
            Classifier::Rf(m) => m.n_features(),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Proba> {
        match self {
            Classifier::Knn(m) => m.predict_proba(x),
            Classifier::Rf(m) => m.predict_proba(x),
        }
    }
}

/// Everything needed to classify a fresh window: the feature recipe,
/// the optional scaler, and the fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub window_size: usize,
    pub feature_mode: FeatureMode,
    pub layout: FeatureLayout,
    pub scaler: Option<MinMaxScaler>,
    pub classifier: Classifier,
}

impl TrainedModel {
    pub const VERSION: u32 = 1;

    pub fn predict_proba(&self, fv: &FeatureVector) -> Result<Proba> {
        if fv.layout != self.layout {
            return Err(PhriError::DimensionMismatch {
                expected: self.layout.len(),
                got: fv.values.len(),
            });
        }
        match &self.scaler {
            Some(s) => {
                let mut row = fv.values.clone();
                s.transform(&mut row);
                self.classifier.predict_proba(&row)
            }
            None => self.classifier.predict_proba(&fv.values),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses a model document; deep trees need the recursion limit lifted.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let model = Self::deserialize(&mut de)?;
        de.end()?;
        if model.version != Self::VERSION {
            return Err(PhriError::InvalidConfig(format!(
                "model version {} is not supported",
                model.version
            )));
        }
        Ok(model)
    }
}

/// Fits the chosen algorithm on `train`.
pub fn fit_classifier(
    train: &[FeatureVector],
    algorithm: Algorithm,
    knn_k: usize,
    forest: &ForestParams,
) -> Result<Classifier> {
    Ok(match algorithm {
        Algorithm::Knn => Classifier::Knn(knn_fit(train, knn_k)?),
        Algorithm::Rf => Classifier::Rf(fit_forest(train, forest)?),
    })
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(PhriError::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Validates a training set and returns its row width.
pub(crate) fn training_dim(train: &[FeatureVector]) -> Result<usize> {
    let first = train.first().ok_or(PhriError::EmptyTrainingSet)?;
    let d = first.values.len();
    if d == 0 {
        return Err(PhriError::InvalidConfig("feature vectors are empty".into()));
    }
    for fv in train {
        check_dim(d, &fv.values)?;
    }
    Ok(d)
}
