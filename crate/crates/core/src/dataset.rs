//! Recordings, observation windows and labeled datasets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PhriError, Result};

/// Number of force-sensing nodes (both ends of six bars).
pub const SENSOR_COUNT: usize = 12;

/// Nominal logging rate of the sensor array.
pub const NOMINAL_SAMPLE_RATE_HZ: f64 = 60.0;

/// Allowed deviation of a frame interval from the nominal period, as a
/// fraction of that period.
pub const JITTER_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionClass {
    Null = 0,
    Drop = 1,
    Squeeze = 2,
    Handle = 3,
}

impl InteractionClass {
    pub const COUNT: usize = 4;
    pub const ALL: [InteractionClass; 4] = [
        InteractionClass::Null,
        InteractionClass::Drop,
        InteractionClass::Squeeze,
        InteractionClass::Handle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            InteractionClass::Null => "null",
            InteractionClass::Drop => "drop",
            InteractionClass::Squeeze => "squeeze",
            InteractionClass::Handle => "handle",
        }
    }
}

impl fmt::Display for InteractionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InteractionClass {
    type Err = PhriError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "null" => Ok(InteractionClass::Null),
            "drop" => Ok(InteractionClass::Drop),
            "squeeze" => Ok(InteractionClass::Squeeze),
            "handle" => Ok(InteractionClass::Handle),
            other => Err(PhriError::InvalidConfig(format!(
                "unknown interaction class `{other}`"
            ))),
        }
    }
}

/// One time-stamped sample of all node sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceFrame {
    /// Seconds since the start of the recording.
    pub t: f64,
    /// Per-node force in Newtons.
    pub f: [f64; SENSOR_COUNT],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: String,
    pub frames: Vec<ForceFrame>,
    pub sample_rate_hz: f64,
    pub label: Option<InteractionClass>,
    pub meta: BTreeMap<String, String>,
}

impl Recording {
    pub fn new(id: impl Into<String>, sample_rate_hz: f64) -> Self {
        Self {
            id: id.into(),
            frames: Vec::new(),
            sample_rate_hz,
            label: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_label(mut self, label: InteractionClass) -> Self {
        self.label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Span between first and last timestamp plus one nominal period.
    pub fn duration_s(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.t - a.t + 1.0 / self.sample_rate_hz,
            _ => 0.0,
        }
    }

    /// Samples of a single channel.
    pub fn channel(&self, sensor: usize) -> Vec<f64> {
        self.frames.iter().map(|fr| fr.f[sensor]).collect()
    }

    /// Copy with timestamps shifted so the first frame sits at t = 0.
    pub fn rebased(&self) -> Recording {
        let t0 = self.frames.first().map_or(0.0, |f| f.t);
        let mut out = self.clone();
        for fr in &mut out.frames {
            fr.t -= t0;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    EmptyRecording,
    NonPositiveSampleRate { sample_rate_hz: f64 },
    NonFiniteForce { sensor: usize },
    NegativeForce { sensor: usize, value: f64 },
    NonFiniteTime,
    NonIncreasingTime { previous: f64, current: f64 },
    TimestampJitter { dt: f64, nominal: f64 },
}

impl Rule {
    /// Jitter is the only rule a lenient ingest may waive.
    pub fn is_jitter(&self) -> bool {
        matches!(self, Rule::TimestampJitter { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Offending frame, when the rule is frame-local.
    pub frame: Option<usize>,
    #[serde(flatten)]
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.frame {
            write!(f, "frame {i}: ")?;
        }
        match &self.rule {
            Rule::EmptyRecording => write!(f, "recording has no frames"),
            Rule::NonPositiveSampleRate { sample_rate_hz } => {
                write!(f, "sample rate {sample_rate_hz} Hz is not positive")
            }
            Rule::NonFiniteForce { sensor } => write!(f, "sensor {sensor} is not finite"),
            Rule::NegativeForce { sensor, value } => {
                write!(f, "sensor {sensor} reads negative force {value}")
            }
            Rule::NonFiniteTime => write!(f, "timestamp is not finite"),
            Rule::NonIncreasingTime { previous, current } => {
                write!(f, "timestamp {current} does not follow {previous}")
            }
            Rule::TimestampJitter { dt, nominal } => {
                write!(f, "interval {dt:.6} s deviates from nominal {nominal:.6} s")
            }
        }
    }
}

/// Checks every recording invariant and reports each breach.
pub fn validate_recording(rec: &Recording) -> Vec<Violation> {
    let mut out = Vec::new();
    if rec.frames.is_empty() {
        out.push(Violation {
            frame: None,
            rule: Rule::EmptyRecording,
        });
    }
    let rate_ok = rec.sample_rate_hz.is_finite() && rec.sample_rate_hz > 0.0;
    if !rate_ok {
        out.push(Violation {
            frame: None,
            rule: Rule::NonPositiveSampleRate {
                sample_rate_hz: rec.sample_rate_hz,
            },
        });
    }
    let nominal = 1.0 / rec.sample_rate_hz;

    for (i, frame) in rec.frames.iter().enumerate() {
        for (sensor, &v) in frame.f.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation {
                    frame: Some(i),
                    rule: Rule::NonFiniteForce { sensor },
                });
            } else if v < 0.0 {
                out.push(Violation {
                    frame: Some(i),
                    rule: Rule::NegativeForce { sensor, value: v },
                });
            }
        }
        if !frame.t.is_finite() {
            out.push(Violation {
                frame: Some(i),
                rule: Rule::NonFiniteTime,
            });
            continue;
        }
        if i == 0 {
            continue;
        }
        let prev = rec.frames[i - 1].t;
        if !prev.is_finite() {
            continue;
        }
        let dt = frame.t - prev;
        if dt <= 0.0 {
            out.push(Violation {
                frame: Some(i),
                rule: Rule::NonIncreasingTime {
                    previous: prev,
                    current: frame.t,
                },
            });
        } else if rate_ok && (dt - nominal).abs() > JITTER_TOLERANCE * nominal + 1e-12 {
            out.push(Violation {
                frame: Some(i),
                rule: Rule::TimestampJitter { dt, nominal },
            });
        }
    }
    out
}

/// Keeps the frames with `start_s <= t < end_s`; label and metadata carry over.
pub fn truncate_recording(rec: &Recording, start_s: f64, end_s: f64) -> Result<Recording> {
    if !(start_s >= 0.0 && start_s < end_s) {
        return Err(PhriError::InvalidRange { start_s, end_s });
    }
    let frames: Vec<ForceFrame> = rec
        .frames
        .iter()
        .filter(|fr| fr.t >= start_s && fr.t < end_s)
        .copied()
        .collect();
    if frames.is_empty() {
        return Err(PhriError::EmptyTruncation { start_s, end_s });
    }
    Ok(Recording {
        id: rec.id.clone(),
        frames,
        sample_rate_hz: rec.sample_rate_hz,
        label: rec.label,
        meta: rec.meta.clone(),
    })
}

/// A fixed-length slice of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub window: Vec<ForceFrame>,
    pub label: InteractionClass,
    pub source_id: String,
    pub offset: usize,
    pub sample_rate_hz: f64,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn channel(&self, sensor: usize) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().map(move |fr| fr.f[sensor])
    }
}

/// Number of windows `window_recording` yields for `n` frames.
pub fn window_count(n: usize, window_size: usize, stride: usize) -> usize {
    if n < window_size || stride == 0 {
        0
    } else {
        (n - window_size) / stride + 1
    }
}

/// Cuts a labeled recording into consecutive windows at offsets
/// `0, stride, 2*stride, ...`, discarding the trailing partial window.
pub fn window_recording(
    rec: &Recording,
    window_size: usize,
    stride: usize,
) -> Result<Vec<Observation>> {
    if window_size < 2 || stride < 1 {
        return Err(PhriError::InvalidWindow {
            window_size,
            stride,
        });
    }
    let label = rec
        .label
        .ok_or_else(|| PhriError::UnlabeledRecording(rec.id.clone()))?;
    let n = window_count(rec.frames.len(), window_size, stride);
    Ok((0..n)
        .map(|i| {
            let offset = i * stride;
            Observation {
                window: rec.frames[offset..offset + window_size].to_vec(),
                label,
                source_id: rec.id.clone(),
                offset,
                sample_rate_hz: rec.sample_rate_hz,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    observations: Vec<Observation>,
    window_size: usize,
    class_counts: BTreeMap<InteractionClass, usize>,
}

impl LabeledDataset {
    pub fn new(window_size: usize, observations: Vec<Observation>) -> Result<Self> {
        if let Some(bad) = observations.iter().find(|o| o.len() != window_size) {
            return Err(PhriError::DimensionMismatch {
                expected: window_size,
                got: bad.len(),
            });
        }
        let mut class_counts = BTreeMap::new();
        for o in &observations {
            *class_counts.entry(o.label).or_insert(0) += 1;
        }
        Ok(Self {
            observations,
            window_size,
            class_counts,
        })
    }

    /// Windows every recording with the same size and stride.
    pub fn from_recordings(
        recordings: &[Recording],
        window_size: usize,
        stride: usize,
    ) -> Result<Self> {
        let mut observations = Vec::new();
        for rec in recordings {
            observations.extend(window_recording(rec, window_size, stride)?);
        }
        Self::new(window_size, observations)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn class_counts(&self) -> &BTreeMap<InteractionClass, usize> {
        &self.class_counts
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn labels(&self) -> Vec<InteractionClass> {
        self.observations.iter().map(|o| o.label).collect()
    }

    /// Dense group index per observation, one group per source recording,
    /// numbered in order of first appearance.
    pub fn groups(&self) -> Vec<usize> {
        let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
        let mut next = 0;
        self.observations
            .iter()
            .map(|o| {
                *ids.entry(o.source_id.as_str()).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::uniform;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn class_encoding_is_bijective() {
        for (i, c) in InteractionClass::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(InteractionClass::from_index(i), Some(*c));
            assert_eq!(c.name().parse::<InteractionClass>().unwrap(), *c);
        }
        assert_eq!(InteractionClass::from_index(4), None);
    }

    #[test]
    fn well_formed_recording_has_no_violations() {
        let rec = uniform(60, 60.0, |_| 1.0);
        assert!(validate_recording(&rec).is_empty());
    }

    #[test]
    fn nan_force_is_reported_at_its_frame() {
        let mut rec = uniform(60, 60.0, |_| 1.0);
        rec.frames[5].f[3] = f64::NAN;
        let v = validate_recording(&rec);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].frame, Some(5));
        assert_eq!(v[0].rule, Rule::NonFiniteForce { sensor: 3 });
    }

    #[test]
    fn repeated_timestamp_is_a_monotonicity_violation() {
        let mut rec = uniform(60, 60.0, |_| 1.0);
        // Shift the tail back one period so t[10] == t[9] and later intervals stay nominal.
        for fr in rec.frames.iter_mut().skip(10) {
            fr.t -= 1.0 / 60.0;
        }
        let v = validate_recording(&rec);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].frame, Some(10));
        assert!(matches!(v[0].rule, Rule::NonIncreasingTime { .. }));
    }

    #[test]
    fn negative_force_and_jitter_are_reported() {
        let mut rec = uniform(10, 60.0, |_| 1.0);
        rec.frames[2].f[0] = -0.5;
        rec.frames[7].t += 0.01;
        let v = validate_recording(&rec);
        assert!(v.iter().any(|x| x.frame == Some(2) && matches!(x.rule, Rule::NegativeForce { .. })));
        assert!(v.iter().any(|x| x.frame == Some(7) && x.rule.is_jitter()));
        assert!(v.iter().any(|x| x.frame == Some(8) && x.rule.is_jitter()));
    }

    #[test]
    fn millisecond_rounding_stays_within_jitter_tolerance() {
        let mut rec = uniform(600, 60.0, |_| 1.0);
        for fr in &mut rec.frames {
            fr.t = (fr.t * 1000.0).round() / 1000.0;
        }
        assert!(validate_recording(&rec).is_empty());
    }

    #[test]
    fn empty_recording_is_a_violation() {
        let rec = Recording::new("e", 60.0);
        assert_eq!(validate_recording(&rec)[0].rule, Rule::EmptyRecording);
    }

    #[test]
    fn truncate_counts_half_open_interval() {
        let rec = uniform(600, 60.0, |i| i as f64);
        let cut = truncate_recording(&rec, 2.0, 4.0).unwrap();
        assert_eq!(cut.len(), 120);
        assert_eq!(cut.frames[0].f[0], 120.0);
        assert_eq!(cut.label, rec.label);
    }

    #[test]
    fn truncate_to_full_duration_is_identity() {
        let rec = uniform(600, 60.0, |i| i as f64);
        assert_eq!(truncate_recording(&rec, 0.0, rec.duration_s()).unwrap(), rec);
    }

    #[test]
    fn truncate_outside_range_is_an_error() {
        let rec = uniform(600, 60.0, |_| 0.0);
        assert!(matches!(
            truncate_recording(&rec, 100.0, 200.0),
            Err(PhriError::EmptyTruncation { .. })
        ));
        assert!(matches!(
            truncate_recording(&rec, 3.0, 2.0),
            Err(PhriError::InvalidRange { .. })
        ));
    }

    #[test]
    fn window_counts() {
        let rec = uniform(600, 60.0, |_| 0.0);
        assert_eq!(window_recording(&rec, 60, 60).unwrap().len(), 10);
        assert_eq!(window_recording(&uniform(60, 60.0, |_| 0.0), 60, 60).unwrap().len(), 1);
        assert!(window_recording(&uniform(59, 60.0, |_| 0.0), 60, 60).unwrap().is_empty());
    }

    #[test]
    fn window_errors() {
        let mut rec = uniform(100, 60.0, |_| 0.0);
        assert!(window_recording(&rec, 1, 1).is_err());
        assert!(window_recording(&rec, 10, 0).is_err());
        rec.label = None;
        assert!(matches!(
            window_recording(&rec, 10, 10),
            Err(PhriError::UnlabeledRecording(_))
        ));
    }

    #[test]
    fn dataset_counts_and_groups() {
        let mut a = uniform(100, 60.0, |_| 0.0);
        a.id = "a".into();
        let mut b = uniform(50, 60.0, |_| 0.0).with_label(InteractionClass::Drop);
        b.id = "b".into();
        let ds = LabeledDataset::from_recordings(&[a, b], 20, 20).unwrap();
        assert_eq!(ds.len(), 7);
        assert_eq!(ds.class_counts()[&InteractionClass::Null], 5);
        assert_eq!(ds.class_counts()[&InteractionClass::Drop], 2);
        assert_eq!(ds.groups(), vec![0, 0, 0, 0, 0, 1, 1]);
    }

    proptest! {
        #[test]
        fn windows_fit_and_count_matches(n in 0usize..400, w in 2usize..80, stride in 1usize..80) {
            let rec = uniform(n, 60.0, |i| i as f64);
            let obs = window_recording(&rec, w, stride).unwrap();
            prop_assert_eq!(obs.len(), window_count(n, w, stride));
            for (i, o) in obs.iter().enumerate() {
                prop_assert_eq!(o.offset, i * stride);
                prop_assert!(o.offset + w <= n);
                prop_assert_eq!(o.window.len(), w);
            }
        }

        #[test]
        fn non_overlapping_windows_tile_the_prefix(n in 0usize..400, w in 2usize..80) {
            let rec = uniform(n, 60.0, |i| i as f64);
            let obs = window_recording(&rec, w, w).unwrap();
            let joined: Vec<ForceFrame> = obs.iter().flat_map(|o| o.window.iter().copied()).collect();
            prop_assert_eq!(&joined[..], &rec.frames[..obs.len() * w]);
        }

        #[test]
        fn truncate_is_idempotent(a in 0.0f64..5.0, len in 0.05f64..5.0) {
            let rec = uniform(600, 60.0, |i| i as f64);
            let b = a + len;
            if let Ok(once) = truncate_recording(&rec, a, b) {
                let twice = truncate_recording(&once, a, b).unwrap();
                prop_assert_eq!(twice.rebased(), once.rebased());
            }
        }
    }
}
