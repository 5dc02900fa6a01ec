//! Classifier inputs from observation windows.
//!
//! Two layouts: the raw window flattened sensor-major, and 36 abstract
//! features (impulse, peak yank, peak force for each of the 12 sensors) whose
//! length does not depend on the window size.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::{fsr_calibrate, NodeCalibration};
use crate::dataset::{InteractionClass, LabeledDataset, Observation, SENSOR_COUNT};
use crate::error::{PhriError, Result};
use crate::par;

pub const ABSTRACT_LEN: usize = 3 * SENSOR_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Raw,
    Abstract,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 2] = [FeatureMode::Raw, FeatureMode::Abstract];

    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::Raw => "raw",
            FeatureMode::Abstract => "abstract",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureMode {
    type Err = PhriError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(FeatureMode::Raw),
            "abstract" | "abst" => Ok(FeatureMode::Abstract),
            other => Err(PhriError::InvalidConfig(format!("unknown feature mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FeatureLayout {
    /// `window` samples per sensor, sensor 0 first.
    Raw { window: usize },
    /// `[J_0..J_11, Ymax_0..Ymax_11, Fmax_0..Fmax_11]`.
    Abstract,
}

impl FeatureLayout {
    pub fn len(&self) -> usize {
        match *self {
            FeatureLayout::Raw { window } => window * SENSOR_COUNT,
            FeatureLayout::Abstract => ABSTRACT_LEN,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column names in slot order.
    pub fn names(&self) -> Vec<String> {
        match *self {
            FeatureLayout::Raw { window } => (0..SENSOR_COUNT)
                .flat_map(|s| (0..window).map(move |i| format!("s{s:02}_t{i:03}")))
                .collect(),
            FeatureLayout::Abstract => ["J", "Ymax", "Fmax"]
                .iter()
                .flat_map(|p| (0..SENSOR_COUNT).map(move |s| format!("{p}_{s:02}")))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
    pub label: InteractionClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureOptions {
    /// Convert FSR readings to node forces before extraction. `None` keeps
    /// the measured range.
    pub calibration: Option<NodeCalibration>,
    /// Use `max |ΔF| / Δt` instead of the signed peak yank.
    pub absolute_yank: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            calibration: Some(NodeCalibration::PROTOTYPE),
            absolute_yank: false,
        }
    }
}

fn check_series(series: &[f64], dt: f64) -> Result<()> {
    if series.len() < 2 {
        return Err(PhriError::SeriesTooShort {
            needed: 2,
            got: series.len(),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PhriError::InvalidTimeStep(dt));
    }
    Ok(())
}

/// Trapezoidal integral of force over the window, N·s.
pub fn total_impulse(series: &[f64], dt: f64) -> Result<f64> {
    check_series(series, dt)?;
    Ok(series
        .windows(2)
        .map(|w| 0.5 * dt * (w[0] + w[1]))
        .sum())
}

/// Largest forward difference quotient, N/s. Signed: a strictly falling
/// series gives a negative value.
pub fn max_yank(series: &[f64], dt: f64) -> Result<f64> {
    check_series(series, dt)?;
    Ok(series
        .windows(2)
        .map(|w| (w[1] - w[0]) / dt)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Largest `|ΔF| / Δt` over the window.
pub fn max_abs_yank(series: &[f64], dt: f64) -> Result<f64> {
    check_series(series, dt)?;
    Ok(series
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / dt)
        .fold(0.0, f64::max))
}

pub fn max_force(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(PhriError::SeriesTooShort { needed: 1, got: 0 });
    }
    Ok(series.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn channel_values(obs: &Observation, sensor: usize, opts: &FeatureOptions) -> Result<Vec<f64>> {
    obs.channel(sensor)
        .map(|v| match &opts.calibration {
            Some(cal) => fsr_calibrate(v, cal),
            None => Ok(v),
        })
        .collect()
}

pub fn extract_abstract(obs: &Observation, opts: &FeatureOptions) -> Result<FeatureVector> {
    let dt = 1.0 / obs.sample_rate_hz;
    let mut values = vec![0.0; ABSTRACT_LEN];
    for s in 0..SENSOR_COUNT {
        let series = channel_values(obs, s, opts)?;
        values[s] = total_impulse(&series, dt)?;
        values[SENSOR_COUNT + s] = if opts.absolute_yank {
            max_abs_yank(&series, dt)?
        } else {
            max_yank(&series, dt)?
        };
        values[2 * SENSOR_COUNT + s] = max_force(&series)?;
    }
    Ok(FeatureVector {
        values,
        layout: FeatureLayout::Abstract,
        label: obs.label,
    })
}

pub fn extract_raw(obs: &Observation, opts: &FeatureOptions) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(obs.len() * SENSOR_COUNT);
    for s in 0..SENSOR_COUNT {
        values.extend(channel_values(obs, s, opts)?);
    }
    Ok(FeatureVector {
        values,
        layout: FeatureLayout::Raw { window: obs.len() },
        label: obs.label,
    })
}

pub fn extract(obs: &Observation, mode: FeatureMode, opts: &FeatureOptions) -> Result<FeatureVector> {
    match mode {
        FeatureMode::Raw => extract_raw(obs, opts),
        FeatureMode::Abstract => extract_abstract(obs, opts),
    }
}

/// Features for every observation, in dataset order.
pub fn extract_dataset(
    data: &LabeledDataset,
    mode: FeatureMode,
    opts: &FeatureOptions,
) -> Result<Vec<FeatureVector>> {
    par::map(data.observations(), |o| extract(o, mode, opts))
        .into_iter()
        .collect()
}

/// Inverse of the raw layout: one row of 12 sensor values per sample.
pub fn unflatten_raw(values: &[f64], window: usize) -> Result<Vec<[f64; SENSOR_COUNT]>> {
    if values.len() != window * SENSOR_COUNT {
        return Err(PhriError::DimensionMismatch {
            expected: window * SENSOR_COUNT,
            got: values.len(),
        });
    }
    Ok((0..window)
        .map(|i| std::array::from_fn(|s| values[s * window + i]))
        .collect())
}

/// Per-column min-max scaling fitted on training rows. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let mut iter = rows.into_iter();
        let first = iter.next()?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for row in iter {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Some(Self { min, max })
    }

    pub fn transform(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            let span = self.max[j] - self.min[j];
            *v = if span > 0.0 { (*v - self.min[j]) / span } else { 0.0 };
        }
    }
}
