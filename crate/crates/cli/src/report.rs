//! Markdown summary of a grid output directory.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use phri_core::classifiers::Algorithm;
use phri_core::dataset::InteractionClass;
use phri_core::evaluation::{GridResult, MetricsReport};
use phri_core::features::FeatureMode;

use crate::failure::{CmdResult, Classify, Failure};
use crate::manifest::RunManifest;

pub const CELLS_DIR: &str = "cells";
pub const REPORT_FILE: &str = "report.md";
pub const ACCURACY_SVG: &str = "accuracy.svg";
pub const AUC_SVG: &str = "auc.svg";
pub const METRICS_CSV: &str = "metrics.csv";
pub const SWEEP_CSV: &str = "sweep.csv";

/// Reads every `cells/*.json`, ordered by cell.
pub fn load_cells(dir: &Path) -> CmdResult<Vec<MetricsReport>> {
    let cells = dir.join(CELLS_DIR);
    let missing = || Failure::data(anyhow::anyhow!("no grid results under {}; run `phri grid` first", dir.display()));
    let entries = std::fs::read_dir(&cells).map_err(|_| missing())?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut reports = Vec::with_capacity(paths.len());
    for p in paths {
        let text = std::fs::read_to_string(&p)
            .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
            .data_err()?;
        let r: MetricsReport = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
            .data_err()?;
        reports.push(r);
    }
    if reports.is_empty() {
        return Err(missing());
    }
    reports.sort_by_key(|r| r.cell);
    Ok(reports)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

fn approach(mode: FeatureMode, algo: Algorithm) -> String {
    format!("{mode} + {}", algo.name().to_uppercase())
}

/// Renders the report. Contains no timestamps, so reruns are byte-identical.
pub fn render(dir: &Path) -> CmdResult<String> {
    let reports = load_cells(dir)?;
    let grid = GridResult {
        reports,
        failures: Vec::new(),
    };
    let best = grid.best().expect("at least one cell");
    let mut s = String::new();
    let _ = writeln!(s, "# Interaction classification report\n");
    let _ = writeln!(s, "{} evaluated cells.\n", grid.reports.len());

    let _ = writeln!(s, "## Best cell\n");
    let p = &best.provenance;
    let _ = writeln!(
        s,
        "`{}`: {} at a window of {} samples, mean accuracy {:.4} (std {:.4}), one-vs-one AUC {}.\n",
        best.cell,
        approach(best.cell.feature_mode, best.cell.algorithm),
        best.cell.window,
        best.accuracy,
        best.accuracy_std,
        fmt_opt(best.ovo_auc)
    );
    let _ = writeln!(
        s,
        "Cross-validation: {} folds x {} repeats, grouping `{}`, SMOTE `{}` (k = {}), min-max scaling {}, stride {}, seed {}.\n",
        p.folds,
        p.repeats,
        p.grouping,
        p.smote,
        p.smote_k,
        if p.min_max_scaling { "on" } else { "off" },
        p.stride,
        p.seed
    );

    let _ = writeln!(s, "## Per-class metrics at the best window per algorithm\n");
    let _ = writeln!(s, "Entries are `raw / abstract`.\n");
    for algo in Algorithm::ALL {
        let Some(top) = grid
            .reports
            .iter()
            .filter(|r| r.cell.algorithm == algo)
            .fold(None, |b: Option<&MetricsReport>, r| match b {
                Some(b) if b.accuracy >= r.accuracy => Some(b),
                _ => Some(r),
            })
        else {
            continue;
        };
        let w = top.cell.window;
        let at = |mode| {
            grid.reports
                .iter()
                .find(|r| r.cell.algorithm == algo && r.cell.window == w && r.cell.feature_mode == mode)
        };
        let (raw, abs) = (at(FeatureMode::Raw), at(FeatureMode::Abstract));
        let _ = writeln!(s, "### {}, window = {w} samples\n", algo.name().to_uppercase());
        let _ = write!(s, "| |");
        for c in InteractionClass::ALL {
            let _ = write!(s, " {} |", c.name());
        }
        let _ = writeln!(s, "\n|---|---|---|---|---|");
        type Pick = fn(&phri_core::evaluation::ClassSummary) -> f64;
        let rows: [(&str, Pick); 3] = [
            ("Precision", |c| c.precision),
            ("Recall", |c| c.recall),
            ("F1", |c| c.f1),
        ];
        for (name, pick) in rows {
            let _ = write!(s, "| {name} |");
            for c in 0..InteractionClass::COUNT {
                let cell = |r: Option<&MetricsReport>| r.map_or_else(|| "-".into(), |r| format!("{:.2}", pick(&r.per_class[c])));
                let _ = write!(s, " {} / {} |", cell(raw), cell(abs));
            }
            s.push('\n');
        }
        s.push('\n');
    }

    let _ = writeln!(s, "## All cells\n");
    let _ = writeln!(s, "| cell | window | features | algorithm | accuracy | std | pooled accuracy | OvO AUC | flags |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|");
    for r in &grid.reports {
        let _ = writeln!(
            s,
            "| `{}` | {} | {} | {} | {:.4} | {:.4} | {:.4} | {} | {} |",
            r.cell,
            r.cell.window,
            r.cell.feature_mode,
            r.cell.algorithm,
            r.accuracy,
            r.accuracy_std,
            r.pooled_accuracy,
            fmt_opt(r.ovo_auc),
            r.flags.len()
        );
    }
    s.push('\n');

    let manifest = dir.join(RunManifest::file_name("grid"));
    if let Ok(text) = std::fs::read_to_string(&manifest) {
        if let Ok(m) = serde_json::from_str::<RunManifest>(&text) {
            if !m.failures.is_empty() {
                let _ = writeln!(s, "## Failed cells\n");
                for f in &m.failures {
                    let _ = writeln!(s, "- {f}");
                }
                s.push('\n');
            }
        }
    }

    let _ = writeln!(s, "## Plots\n");
    let _ = writeln!(s, "- Accuracy vs. window: [{ACCURACY_SVG}]({ACCURACY_SVG})");
    let _ = writeln!(s, "- One-vs-one AUC vs. window: [{AUC_SVG}]({AUC_SVG})");
    let _ = writeln!(s, "- Sweep table: [{SWEEP_CSV}]({SWEEP_CSV}), cell table: [{METRICS_CSV}]({METRICS_CSV})");
    Ok(s)
}
