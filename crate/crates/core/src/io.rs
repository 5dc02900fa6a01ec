//! On-disk formats: recording CSV plus sidecar JSON, dataset bundles,
//! feature tables, metrics tables and window-sweep series.
//!
//! Recording CSV: header `t_ms,s00,...,s11`, integer milliseconds, forces in
//! newtons with at most 6 significant digits, UTF-8, LF line endings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{
    validate_recording, ForceFrame, InteractionClass, Observation, Recording, Violation, NOMINAL_SAMPLE_RATE_HZ,
    SENSOR_COUNT,
};
use crate::error::{PhriError, Result};
use crate::evaluation::{MetricsReport, SweepPoint};
use crate::features::FeatureVector;

pub const CSV_FIELDS: usize = SENSOR_COUNT + 1;

pub fn csv_header() -> String {
    let mut h = String::from("t_ms");
    for s in 0..SENSOR_COUNT {
        write!(h, ",s{s:02}").unwrap();
    }
    h
}

/// Rounds to 6 significant digits and prints the shortest exact form.
pub fn format_force(v: f64) -> String {
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn time_to_ms(t: f64) -> i64 {
    (t * 1000.0).round() as i64
}

/// Sidecar JSON stored next to each recording CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub label: Option<InteractionClass>,
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Sidecar {
    pub fn of(rec: &Recording) -> Self {
        Self {
            label: rec.label,
            sample_rate_hz: rec.sample_rate_hz,
            meta: rec.meta.clone(),
        }
    }
}

pub fn recording_csv(rec: &Recording) -> String {
    let mut out = csv_header();
    out.push('\n');
    for fr in &rec.frames {
        write!(out, "{}", time_to_ms(fr.t)).unwrap();
        for v in fr.f {
            out.push(',');
            out.push_str(&format_force(v));
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| PhriError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| PhriError::io(path, e))
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `<id>.csv` and `<id>.json` into `dir`; returns the CSV path.
pub fn write_recording(dir: &Path, rec: &Recording) -> Result<PathBuf> {
    let csv = dir.join(format!("{}.csv", rec.id));
    write_file(&csv, &recording_csv(rec))?;
    let mut json = serde_json::to_string_pretty(&Sidecar::of(rec))?;
    json.push('\n');
    write_file(&sidecar_path(&csv), &json)?;
    Ok(csv)
}

/// Parses recording CSV text. Errors carry the 1-based line and column.
pub fn parse_recording_csv(path: &Path, text: &str) -> Result<Vec<ForceFrame>> {
    let err = |line: usize, column: usize, message: String| PhriError::Parse {
        path: path.to_path_buf(),
        line: line as u64,
        column,
        message,
    };
    let mut lines = text.split('\n').enumerate();
    let header = lines.next().map(|(_, l)| l.trim_end_matches('\r')).unwrap_or("");
    let expected = csv_header();
    if header != expected {
        let fields: Vec<&str> = header.split(',').collect();
        let want: Vec<&str> = expected.split(',').collect();
        let column = fields
            .iter()
            .zip(&want)
            .position(|(a, b)| a != b)
            .unwrap_or(fields.len().min(want.len()))
            + 1;
        return Err(err(
            1,
            column,
            format!("header must be `{expected}` ({} columns), found {} columns", want.len(), fields.len()),
        ));
    }
    let mut frames = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != CSV_FIELDS {
            return Err(err(
                i + 1,
                fields.len().min(CSV_FIELDS) + 1,
                format!("expected {CSV_FIELDS} columns, found {}", fields.len()),
            ));
        }
        let ms: i64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| err(i + 1, 1, format!("`{}` is not an integer millisecond count", fields[0])))?;
        let mut f = [0.0; SENSOR_COUNT];
        for s in 0..SENSOR_COUNT {
            f[s] = fields[s + 1]
                .trim()
                .parse()
                .map_err(|_| err(i + 1, s + 2, format!("`{}` is not a number", fields[s + 1])))?;
        }
        frames.push(ForceFrame {
            t: ms as f64 / 1000.0,
            f,
        });
    }
    Ok(frames)
}

/// Reads a recording CSV and its sidecar, if one exists. Without a sidecar
/// the recording is unlabeled at the nominal rate.
pub fn read_recording(csv: &Path) -> Result<Recording> {
    let frames = parse_recording_csv(csv, &read_file(csv)?)?;
    let side = sidecar_path(csv);
    let sidecar = if side.exists() {
        serde_json::from_str(&read_file(&side)?)?
    } else {
        Sidecar {
            label: None,
            sample_rate_hz: NOMINAL_SAMPLE_RATE_HZ,
            meta: BTreeMap::new(),
        }
    };
    let id = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Recording {
        id,
        frames,
        sample_rate_hz: sidecar.sample_rate_hz,
        label: sidecar.label,
        meta: sidecar.meta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub id: String,
    pub csv: PathBuf,
    pub label: Option<InteractionClass>,
    pub frames: usize,
    pub accepted: bool,
    /// Read or parse failure, if any.
    pub error: Option<String>,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

/// Index of ingested recordings with their validation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub version: u32,
    pub lenient: bool,
    pub entries: Vec<BundleEntry>,
}

impl DatasetBundle {
    pub const VERSION: u32 = 1;
    pub const FILE_NAME: &'static str = "bundle.json";

    pub fn accepted(&self) -> impl Iterator<Item = &BundleEntry> {
        self.entries.iter().filter(|e| e.accepted)
    }

    pub fn rejected(&self) -> impl Iterator<Item = &BundleEntry> {
        self.entries.iter().filter(|e| !e.accepted)
    }

    /// Re-reads every accepted recording, applying the bundle's labels.
    pub fn load_recordings(&self) -> Result<Vec<Recording>> {
        self.accepted()
            .map(|e| {
                let mut rec = read_recording(&e.csv)?;
                rec.label = e.label;
                Ok(rec)
            })
            .collect()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bundle: Self = serde_json::from_str(&read_file(path)?)?;
        if bundle.version != Self::VERSION {
            return Err(PhriError::InvalidConfig(format!(
                "{}: bundle version {} is not supported",
                path.display(),
                bundle.version
            )));
        }
        Ok(bundle)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        write_file(path, &json)
    }
}

/// Parses a `id,label` table; a header row starting with `id` is skipped.
pub fn parse_labels(path: &Path, text: &str) -> Result<BTreeMap<String, InteractionClass>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line.starts_with("id,")) {
            continue;
        }
        let Some((id, label)) = line.split_once(',') else {
            return Err(PhriError::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                column: 1,
                message: "expected `id,label`".into(),
            });
        };
        let label = label.trim().parse().map_err(|e: PhriError| PhriError::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            column: 2,
            message: e.to_string(),
        })?;
        out.insert(id.trim().to_string(), label);
    }
    Ok(out)
}

/// Reads and validates every `*.csv` in `dir`, sorted by file name.
///
/// A recording is accepted when it parses, has a label and breaks no rule.
/// With `lenient`, timestamp jitter alone is downgraded to a warning.
pub fn ingest_dir(
    dir: &Path,
    labels: Option<&BTreeMap<String, InteractionClass>>,
    lenient: bool,
) -> Result<DatasetBundle> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| PhriError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let entries = paths
        .into_iter()
        .map(|csv| {
            let id = csv
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let mut entry = BundleEntry {
                id: id.clone(),
                csv: csv.clone(),
                label: None,
                frames: 0,
                accepted: false,
                error: None,
                violations: Vec::new(),
                warnings: Vec::new(),
            };
            let rec = match read_recording(&csv) {
                Ok(rec) => rec,
                Err(e) => {
                    entry.error = Some(e.to_string());
                    return entry;
                }
            };
            entry.frames = rec.frames.len();
            entry.label = labels.and_then(|l| l.get(&id).copied()).or(rec.label);
            entry.violations = validate_recording(&rec);
            let blocking = entry
                .violations
                .iter()
                .filter(|v| !(lenient && v.rule.is_jitter()))
                .count();
            if lenient {
                entry.warnings = entry
                    .violations
                    .iter()
                    .filter(|v| v.rule.is_jitter())
                    .map(|v| v.to_string())
                    .collect();
            }
            if entry.label.is_none() {
                entry.error = Some("recording has no label".into());
            }
            entry.accepted = blocking == 0 && entry.label.is_some();
            entry
        })
        .collect();
    Ok(DatasetBundle {
        version: DatasetBundle::VERSION,
        lenient,
        entries,
    })
}

/// Feature table with one row per observation:
/// `source_id,offset,label,<feature names>`.
pub fn features_csv(observations: &[Observation], features: &[FeatureVector]) -> Result<String> {
    if observations.len() != features.len() {
        return Err(PhriError::LengthMismatch {
            left: observations.len(),
            right: features.len(),
        });
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["source_id".to_string(), "offset".into(), "label".into()];
    if let Some(first) = features.first() {
        header.extend(first.layout.names());
    }
    w.write_record(&header)?;
    for (o, fv) in observations.iter().zip(features) {
        let mut row = vec![o.source_id.clone(), o.offset.to_string(), fv.label.to_string()];
        row.extend(fv.values.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| PhriError::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per cell: headline scores, per-class P/R/F1 and the pooled
/// confusion matrix (`cm_<true>_<predicted>`).
pub fn metrics_csv(reports: &[MetricsReport]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header: Vec<String> = [
        "window",
        "feature_mode",
        "algorithm",
        "n_observations",
        "feature_dim",
        "accuracy",
        "accuracy_std",
        "pooled_accuracy",
        "ovo_auc",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for c in InteractionClass::ALL {
        for m in ["precision", "recall", "f1"] {
            header.push(format!("{c}_{m}"));
        }
    }
    for t in InteractionClass::ALL {
        for p in InteractionClass::ALL {
            header.push(format!("cm_{t}_{p}"));
        }
    }
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![
            r.cell.window.to_string(),
            r.cell.feature_mode.to_string(),
            r.cell.algorithm.to_string(),
            r.n_observations.to_string(),
            r.feature_dim.to_string(),
            r.accuracy.to_string(),
            r.accuracy_std.to_string(),
            r.pooled_accuracy.to_string(),
            opt(r.ovo_auc),
        ];
        for c in &r.per_class {
            row.extend([c.precision.to_string(), c.recall.to_string(), c.f1.to_string()]);
        }
        for t in 0..InteractionClass::COUNT {
            for p in 0..InteractionClass::COUNT {
                row.push(r.confusion.0[t][p].to_string());
            }
        }
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn sweep_csv(points: &[SweepPoint]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    if points.is_empty() {
        w.write_record(["feature_mode", "algorithm", "window", "accuracy", "ovo_auc"])?;
    }
    finish(w)
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepPoint>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
