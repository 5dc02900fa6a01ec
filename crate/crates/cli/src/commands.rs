//! Command implementations. Each artifact-producing command writes one
//! `<command>.manifest.json` next to its outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use phri_core::classifiers::{fit_classifier, predict_label, Algorithm, TrainedModel};
use phri_core::dataset::{InteractionClass, LabeledDataset, Recording};
use phri_core::evaluation::{
    confusion_matrix, ovo_auc, prf_per_class, run_experiment_grid, AucSummary, ClassScores, ConfusionMatrix,
};
use phri_core::features::{extract_dataset, FeatureMode, FeatureVector, MinMaxScaler};
use phri_core::io::{features_csv, ingest_dir, metrics_csv, parse_labels, sweep_csv, write_recording, DatasetBundle};
use phri_core::resampling::smote_balance;
use phri_core::rng::derive_seed;
use phri_core::statics::{build_icosahedron_topology_with_diameter, solve_force_densities, StaticsDocument};
use phri_core::synth::synth_dataset;

use crate::config::{class_counts, Config};
use crate::failure::{CmdResult, Classify, Failure};
use crate::manifest::RunManifest;
use crate::plot::{sweep_chart, Metric};
use crate::report::{self, ACCURACY_SVG, AUC_SVG, CELLS_DIR, METRICS_CSV, REPORT_FILE, SWEEP_CSV};

pub const STATICS_FILE: &str = "statics.json";
pub const FEATURES_FILE: &str = "features.csv";
pub const MODEL_FILE: &str = "model.json";
pub const EVALUATION_FILE: &str = "evaluation.json";

fn ensure_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", dir.display()))
        .data_err()
}

fn write_text(path: &Path, text: &str) -> CmdResult<PathBuf> {
    std::fs::write(path, text)
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
        .data_err()?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult<PathBuf> {
    let mut json = serde_json::to_string_pretty(value).internal_err()?;
    json.push('\n');
    write_text(path, &json)
}

/// Recordings from a bundle file, a directory holding `bundle.json`, or a
/// directory of labeled CSVs with sidecars (validated strictly).
pub fn load_input(path: &Path) -> CmdResult<Vec<Recording>> {
    let bundle_path = if path.is_dir() {
        path.join(DatasetBundle::FILE_NAME)
    } else {
        path.to_path_buf()
    };
    let recordings = if bundle_path.is_file() {
        DatasetBundle::read(&bundle_path)?.load_recordings()?
    } else if path.is_dir() {
        let bundle = ingest_dir(path, None, false)?;
        if let Some(bad) = bundle.rejected().next() {
            return Err(Failure::data(anyhow::anyhow!(
                "{} of {} recordings in {} fail validation (first: {}); run `phri ingest` to inspect",
                bundle.rejected().count(),
                bundle.entries.len(),
                path.display(),
                bad.id
            )));
        }
        bundle.load_recordings()?
    } else {
        return Err(Failure::data(anyhow::anyhow!("input {} does not exist", path.display())));
    };
    if recordings.is_empty() {
        return Err(Failure::data(anyhow::anyhow!("input {} holds no recordings", path.display())));
    }
    Ok(recordings)
}

pub fn synth(cfg: &Config, out: &Path) -> CmdResult {
    cfg.validate()?;
    let counts = class_counts(cfg.synth.total, &cfg.synth.ratios)?;
    ensure_dir(out)?;
    let mut manifest = RunManifest::start("synth", cfg);
    let recordings = synth_dataset(&cfg.synth.generator, &cfg.synth.templates, &counts)?;
    for rec in &recordings {
        let csv = write_recording(out, rec)?;
        manifest.outputs.push(phri_core::io::sidecar_path(&csv));
        manifest.outputs.push(csv);
    }
    manifest.notes.push(format!(
        "class counts (null, drop, squeeze, handle): {:?}",
        counts.0
    ));
    log::info!("wrote {} recordings to {}", recordings.len(), out.display());
    manifest.finish(out)?;
    Ok(())
}

/// Writes the bundle; fails with a data error when anything was rejected.
pub fn ingest(cfg: &Config, input: &Path, labels: Option<&Path>, lenient: bool, out: &Path) -> CmdResult {
    let label_map = match labels {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", p.display()))
                .data_err()?;
            Some(parse_labels(p, &text)?)
        }
        None => None,
    };
    let bundle = ingest_dir(input, label_map.as_ref(), lenient)?;
    ensure_dir(out)?;
    let mut manifest = RunManifest::start("ingest", cfg);
    manifest.inputs.push(input.to_path_buf());
    if let Some(p) = labels {
        manifest.inputs.push(p.to_path_buf());
    }
    let path = out.join(DatasetBundle::FILE_NAME);
    bundle.write(&path)?;
    manifest.outputs.push(path);
    for e in &bundle.entries {
        for w in &e.warnings {
            log::warn!("{}: {w}", e.id);
        }
    }
    let rejected: Vec<String> = bundle
        .rejected()
        .map(|e| {
            let why = e
                .error
                .clone()
                .or_else(|| e.violations.first().map(|v| v.to_string()))
                .unwrap_or_default();
            format!("{}: {why}", e.id)
        })
        .collect();
    manifest.notes.push(format!(
        "{} accepted, {} rejected",
        bundle.accepted().count(),
        rejected.len()
    ));
    manifest.failures = rejected.clone();
    manifest.finish(out)?;
    if !rejected.is_empty() {
        return Err(Failure::data(anyhow::anyhow!(
            "{} recordings rejected:\n  {}",
            rejected.len(),
            rejected.join("\n  ")
        )));
    }
    Ok(())
}

pub fn statics(cfg: &Config, out: &Path) -> CmdResult {
    let (graph, pos) = build_icosahedron_topology_with_diameter(cfg.statics.diameter_m);
    let eq = solve_force_densities(&graph, &pos, cfg.statics.prestress_n)?;
    let doc = StaticsDocument::new(&graph, &eq);
    ensure_dir(out)?;
    let mut manifest = RunManifest::start("statics", cfg);
    manifest.outputs.push(write_json(&out.join(STATICS_FILE), &doc)?);
    manifest.notes.push(format!("equilibrium residual {:.3e} N", doc.residual_n));
    manifest.finish(out)?;
    Ok(())
}

fn windowed(recordings: &[Recording], window: usize, stride: Option<usize>) -> CmdResult<LabeledDataset> {
    Ok(LabeledDataset::from_recordings(recordings, window, stride.unwrap_or(window))?)
}

pub fn features(cfg: &Config, input: &Path, out: &Path) -> CmdResult {
    let f = &cfg.features;
    let recordings = load_input(input)?;
    let data = windowed(&recordings, f.window, f.stride)?;
    let fvs = extract_dataset(&data, f.mode, &cfg.cv.features)?;
    ensure_dir(out)?;
    let mut manifest = RunManifest::start("features", cfg);
    manifest.inputs.push(input.to_path_buf());
    manifest
        .outputs
        .push(write_text(&out.join(FEATURES_FILE), &features_csv(data.observations(), &fvs)?)?);
    manifest.notes.push(format!("{} observations", fvs.len()));
    manifest.finish(out)?;
    Ok(())
}

/// Fits one model on every observation of the input.
pub fn train(cfg: &Config, input: &Path, out: &Path) -> CmdResult {
    cfg.validate()?;
    let t = &cfg.train;
    let recordings = load_input(input)?;
    let data = windowed(&recordings, t.window, cfg.cv.stride)?;
    let mut fvs = extract_dataset(&data, t.features, &cfg.cv.features)?;
    let scaler = if cfg.cv.min_max_scaling {
        MinMaxScaler::fit(fvs.iter().map(|f| f.values.as_slice()))
    } else {
        None
    };
    if let Some(s) = &scaler {
        for f in &mut fvs {
            s.transform(&mut f.values);
        }
    }
    let mut manifest = RunManifest::start("train", cfg);
    manifest.inputs.push(input.to_path_buf());
    let train: Vec<FeatureVector> = if t.smote {
        let balanced = smote_balance(&fvs, cfg.cv.smote_k, derive_seed(cfg.cv.seed, &[0]))?;
        manifest.notes.extend(balanced.warnings.iter().cloned());
        manifest
            .notes
            .push(format!("SMOTE added {} synthetic rows", balanced.synthetic_count()));
        balanced.features
    } else {
        fvs
    };
    let mut forest = cfg.cv.forest;
    forest.seed = derive_seed(cfg.cv.seed, &[1]);
    let classifier = fit_classifier(&train, t.algorithm, cfg.cv.knn_k, &forest)?;
    let model = TrainedModel {
        version: TrainedModel::VERSION,
        window_size: t.window,
        feature_mode: t.features,
        layout: train[0].layout,
        scaler,
        classifier,
    };
    ensure_dir(out)?;
    let mut json = model.to_json()?;
    json.push('\n');
    manifest.outputs.push(write_text(&out.join(MODEL_FILE), &json)?);
    manifest.notes.push(format!("{} training rows", train.len()));
    manifest.finish(out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub window_size: usize,
    pub feature_mode: FeatureMode,
    pub algorithm: Algorithm,
    pub n_observations: usize,
    pub accuracy: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub per_class: [ClassScores; InteractionClass::COUNT],
    pub ovo_auc: AucSummary,
}

/// Scores a saved model on the input's observations.
pub fn evaluate(cfg: &Config, model_path: &Path, input: &Path, out: &Path) -> CmdResult {
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", model_path.display()))
        .data_err()?;
    let model = TrainedModel::from_json(&text)?;
    let recordings = load_input(input)?;
    let data = windowed(&recordings, model.window_size, cfg.cv.stride)?;
    let fvs = extract_dataset(&data, model.feature_mode, &cfg.cv.features)?;
    let mut proba = Vec::with_capacity(fvs.len());
    let mut predicted = Vec::with_capacity(fvs.len());
    for fv in &fvs {
        let p = model.predict_proba(fv)?;
        predicted.push(predict_label(&p)?);
        proba.push(p);
    }
    let truth: Vec<InteractionClass> = fvs.iter().map(|f| f.label).collect();
    let confusion = confusion_matrix(&truth, &predicted)?;
    let doc = Evaluation {
        window_size: model.window_size,
        feature_mode: model.feature_mode,
        algorithm: model.classifier.algorithm(),
        n_observations: fvs.len(),
        accuracy: confusion.accuracy(),
        per_class: prf_per_class(&confusion),
        ovo_auc: ovo_auc(&truth, &proba)?,
        confusion,
    };
    ensure_dir(out)?;
    let mut manifest = RunManifest::start("evaluate", cfg);
    manifest.inputs.push(model_path.to_path_buf());
    manifest.inputs.push(input.to_path_buf());
    manifest.outputs.push(write_json(&out.join(EVALUATION_FILE), &doc)?);
    manifest.finish(out)?;
    Ok(())
}

/// Runs the grid. Exits with a data error only when every cell failed.
pub fn grid(cfg: &Config, input: &Path, out: &Path) -> CmdResult {
    cfg.validate()?;
    let recordings = load_input(input)?;
    let result = run_experiment_grid(&recordings, &cfg.grid, &cfg.cv)?;
    let cells = out.join(CELLS_DIR);
    ensure_dir(&cells)?;
    if let Ok(entries) = std::fs::read_dir(&cells) {
        for e in entries.flatten() {
            if e.path().extension().is_some_and(|x| x == "json") {
                let _ = std::fs::remove_file(e.path());
            }
        }
    }
    let mut manifest = RunManifest::start("grid", cfg);
    manifest.inputs.push(input.to_path_buf());
    for r in &result.reports {
        manifest.outputs.push(write_json(&cells.join(format!("{}.json", r.cell)), r)?);
    }
    manifest
        .outputs
        .push(write_text(&out.join(METRICS_CSV), &metrics_csv(&result.reports)?)?);
    let sweep = result.sweep();
    manifest.outputs.push(write_text(&out.join(SWEEP_CSV), &sweep_csv(&sweep)?)?);
    manifest
        .outputs
        .push(write_text(&out.join(ACCURACY_SVG), &sweep_chart(&sweep, Metric::Accuracy))?);
    manifest
        .outputs
        .push(write_text(&out.join(AUC_SVG), &sweep_chart(&sweep, Metric::OvoAuc))?);
    manifest.failures = result
        .failures
        .iter()
        .map(|f| format!("{}: {}", f.cell, f.error))
        .collect();
    for f in &manifest.failures {
        log::warn!("cell {f}");
    }
    if let Some(best) = result.best() {
        manifest
            .notes
            .push(format!("best cell {} with mean accuracy {:.4}", best.cell, best.accuracy));
    }
    let all_failed = result.reports.is_empty();
    manifest.finish(out)?;
    if all_failed {
        return Err(Failure::data(anyhow::anyhow!(
            "every grid cell failed; first error: {}",
            result.failures.first().map_or("no cells requested", |f| f.error.as_str())
        )));
    }
    Ok(())
}

pub fn report(cfg: &Config, dir: &Path) -> CmdResult {
    let text = report::render(dir)?;
    let mut manifest = RunManifest::start("report", cfg);
    manifest.inputs.push(dir.join(CELLS_DIR));
    manifest.outputs.push(write_text(&dir.join(REPORT_FILE), &text)?);
    manifest.finish(dir)?;
    Ok(())
}
