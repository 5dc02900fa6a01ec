//! The experiment grid: every (window, feature mode, algorithm) cell is
//! scored by repeated stratified k-fold cross-validation.
//!
//! Seeds are derived from the cell's window and feature mode plus the
//! repeat and fold, never from grid position, so a filtered grid reproduces
//! the matching cells of the full one.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::folds::{stratified_group_kfold, FoldPlan, DEFAULT_FOLDS, DEFAULT_REPEATS};
use super::metrics::{confusion_matrix, ovo_auc, prf_per_class, ConfusionMatrix};
use crate::classifiers::{fit_classifier, predict_label, Algorithm, ForestParams, Proba, DEFAULT_KNN_K};
use crate::dataset::{InteractionClass, LabeledDataset, Recording};
use crate::error::{PhriError, Result};
use crate::features::{extract_dataset, FeatureMode, FeatureOptions, FeatureVector, MinMaxScaler};
use crate::par;
use crate::resampling::{smote_balance, DEFAULT_SMOTE_K};
use crate::rng::derive_seed;

const CLASSES: usize = InteractionClass::COUNT;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub windows: Vec<usize>,
    pub feature_modes: Vec<FeatureMode>,
    pub algorithms: Vec<Algorithm>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            windows: (1..=10).map(|i| 10 * i).collect(),
            feature_modes: FeatureMode::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
        }
    }
}

impl GridSpec {
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &window in &self.windows {
            for &feature_mode in &self.feature_modes {
                for &algorithm in &self.algorithms {
                    out.push(CellKey {
                        window,
                        feature_mode,
                        algorithm,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub window: usize,
    pub feature_mode: FeatureMode,
    pub algorithm: Algorithm,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{:03}_{}_{}", self.window, self.feature_mode, self.algorithm)
    }
}

/// How observations are kept together when folds are dealt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// Every window of a recording lands in the same fold.
    Recording,
    /// Observations are dealt individually.
    None,
}

/// Where SMOTE runs relative to the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoteMode {
    /// Inside each training fold only.
    InFold,
    /// Once on the whole feature set before splitting, so synthetics built
    /// from validation rows can land in training folds. Only real rows are scored.
    BeforeSplit,
    Off,
}

macro_rules! kebab_enum {
    ($t:ty { $($name:literal => $v:expr),+ $(,)? }) => {
        impl FromStr for $t {
            type Err = PhriError;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($v),)+
                    other => Err(PhriError::InvalidConfig(format!("unknown value `{other}`"))),
                }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $v { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

kebab_enum!(Grouping { "recording" => Grouping::Recording, "none" => Grouping::None });
kebab_enum!(SmoteMode { "in-fold" => SmoteMode::InFold, "before-split" => SmoteMode::BeforeSplit, "off" => SmoteMode::Off });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub grouping: Grouping,
    pub smote: SmoteMode,
    pub smote_k: usize,
    pub min_max_scaling: bool,
    /// Window stride in samples; `None` means non-overlapping windows.
    pub stride: Option<usize>,
    pub knn_k: usize,
    /// `seed` here is ignored; each fit derives its own.
    pub forest: ForestParams,
    pub features: FeatureOptions,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            repeats: DEFAULT_REPEATS,
            grouping: Grouping::Recording,
            smote: SmoteMode::InFold,
            smote_k: DEFAULT_SMOTE_K,
            min_max_scaling: false,
            stride: None,
            knn_k: DEFAULT_KNN_K,
            forest: ForestParams::default(),
            features: FeatureOptions::default(),
            seed: 0,
        }
    }
}

/// Everything needed to rerun one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub window_size: usize,
    pub stride: usize,
    pub feature_mode: FeatureMode,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub fold_seed: u64,
    pub folds: usize,
    pub repeats: usize,
    pub grouping: Grouping,
    pub smote: SmoteMode,
    pub smote_k: usize,
    pub min_max_scaling: bool,
    pub knn_k: Option<usize>,
    pub forest: Option<ForestParams>,
    pub features: FeatureOptions,
}

/// Fold-mean scores for one class. `undefined_folds` counts folds where a
/// 0/0 ratio was reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: InteractionClass,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub undefined_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cell: CellKey,
    pub provenance: Provenance,
    pub n_observations: usize,
    pub class_counts: [usize; CLASSES],
    pub feature_dim: usize,
    pub per_class: [ClassSummary; CLASSES],
    /// Unweighted mean of fold accuracies.
    pub accuracy: f64,
    pub accuracy_std: f64,
    /// Mean of fold macro AUCs over folds where it is defined.
    pub ovo_auc: Option<f64>,
    /// Summed over every fold and repeat; row sums are `repeats` times the class counts.
    pub confusion: ConfusionMatrix,
    /// `trace / total` of `confusion`.
    pub pooled_accuracy: f64,
    pub fold_accuracy: Vec<f64>,
    pub fold_auc: Vec<Option<f64>>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: CellKey,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub feature_mode: FeatureMode,
    pub algorithm: Algorithm,
    pub window: usize,
    pub accuracy: f64,
    pub ovo_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub reports: Vec<MetricsReport>,
    pub failures: Vec<CellFailure>,
}

impl GridResult {
    /// Accuracy and AUC against window, ordered by series then window.
    pub fn sweep(&self) -> Vec<SweepPoint> {
        let mut pts: Vec<SweepPoint> = self
            .reports
            .iter()
            .map(|r| SweepPoint {
                feature_mode: r.cell.feature_mode,
                algorithm: r.cell.algorithm,
                window: r.cell.window,
                accuracy: r.accuracy,
                ovo_auc: r.ovo_auc,
            })
            .collect();
        pts.sort_by_key(|p| (p.feature_mode, p.algorithm, p.window));
        pts
    }

    pub fn report(&self, cell: &CellKey) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.cell == *cell)
    }

    /// Highest mean accuracy; ties go to the earlier cell.
    pub fn best(&self) -> Option<&MetricsReport> {
        self.reports
            .iter()
            .fold(None, |b: Option<&MetricsReport>, r| match b {
                Some(b) if b.accuracy >= r.accuracy => Some(b),
                _ => Some(r),
            })
    }
}

struct FoldScore {
    confusion: ConfusionMatrix,
    auc: Option<f64>,
    skipped_pairs: usize,
}

struct WindowData {
    features: Vec<FeatureVector>,
    groups: Vec<usize>,
    /// Set for rows created by a pre-split SMOTE pass.
    synthetic: Vec<bool>,
}

fn mode_code(mode: FeatureMode) -> u64 {
    match mode {
        FeatureMode::Raw => 0,
        FeatureMode::Abstract => 1,
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 || self.repeats == 0 {
            return Err(PhriError::InvalidFoldCount(self.folds));
        }
        if self.smote_k == 0 || self.knn_k == 0 {
            return Err(PhriError::InvalidConfig("smote_k and knn_k must be >= 1".into()));
        }
        if self.stride == Some(0) {
            return Err(PhriError::InvalidConfig("stride must be >= 1".into()));
        }
        self.forest.validate()
    }

    fn fold_seed(&self, window: usize) -> u64 {
        derive_seed(self.seed, &[window as u64])
    }

    fn fit_seed(&self, window: usize, mode: FeatureMode, repeat: usize, fold: usize, purpose: u64) -> u64 {
        derive_seed(
            self.seed,
            &[window as u64, mode_code(mode), repeat as u64, fold as u64, purpose],
        )
    }

    fn prepare(&self, dataset: &LabeledDataset, window: usize, mode: FeatureMode) -> Result<WindowData> {
        let features = extract_dataset(dataset, mode, &self.features)?;
        let groups = match self.grouping {
            Grouping::Recording => dataset.groups(),
            Grouping::None => (0..features.len()).collect(),
        };
        if self.smote != SmoteMode::BeforeSplit {
            let synthetic = vec![false; features.len()];
            return Ok(WindowData {
                features,
                groups,
                synthetic,
            });
        }
        let seed = derive_seed(self.seed, &[window as u64, mode_code(mode), u64::MAX]);
        let balanced = smote_balance(&features, self.smote_k, seed)?;
        let mut groups_out = groups.clone();
        let mut next = groups.iter().max().map_or(0, |g| g + 1);
        let mut synthetic = Vec::with_capacity(balanced.origins.len());
        for origin in &balanced.origins {
            synthetic.push(origin.is_some());
            if let Some(o) = origin {
                groups_out.push(match self.grouping {
                    Grouping::Recording => groups[o.seed],
                    Grouping::None => {
                        next += 1;
                        next - 1
                    }
                });
            }
        }
        Ok(WindowData {
            features: balanced.features,
            groups: groups_out,
            synthetic,
        })
    }

    /// Trains every requested algorithm on one training fold and scores
    /// the held-out fold.
    fn run_fold(
        &self,
        data: &WindowData,
        plan: &FoldPlan,
        key: (usize, FeatureMode, usize, usize),
        algorithms: &[Algorithm],
    ) -> Vec<std::result::Result<FoldScore, String>> {
        let (window, mode, r, f) = key;
        let prep = || -> Result<(Vec<FeatureVector>, Vec<FeatureVector>)> {
            let mut train: Vec<FeatureVector> =
                plan.training(r, f).into_iter().map(|i| data.features[i].clone()).collect();
            let mut val: Vec<FeatureVector> = plan
                .validation(r, f)
                .iter()
                .filter(|&&i| !data.synthetic[i])
                .map(|&i| data.features[i].clone())
                .collect();
            if self.min_max_scaling {
                let scaler = MinMaxScaler::fit(train.iter().map(|fv| fv.values.as_slice()))
                    .ok_or(PhriError::EmptyTrainingSet)?;
                for fv in train.iter_mut().chain(val.iter_mut()) {
                    scaler.transform(&mut fv.values);
                }
            }
            if self.smote == SmoteMode::InFold {
                train = smote_balance(&train, self.smote_k, self.fit_seed(window, mode, r, f, 0))?.features;
            }
            Ok((train, val))
        };
        let (train, val) = match prep() {
            Ok(tv) => tv,
            Err(e) => return algorithms.iter().map(|_| Err(e.to_string())).collect(),
        };
        algorithms
            .iter()
            .map(|&algo| -> Result<FoldScore> {
                let forest = ForestParams {
                    seed: self.fit_seed(window, mode, r, f, 1),
                    ..self.forest
                };
                let model = fit_classifier(&train, algo, self.knn_k, &forest)?;
                let proba: Vec<Proba> = par::map(&val, |fv| model.predict_proba(&fv.values))
                    .into_iter()
                    .collect::<Result<_>>()?;
                let truth: Vec<InteractionClass> = val.iter().map(|fv| fv.label).collect();
                let pred = proba.iter().map(|p| predict_label(p)).collect::<Result<Vec<_>>>()?;
                let auc = ovo_auc(&truth, &proba)?;
                Ok(FoldScore {
                    confusion: confusion_matrix(&truth, &pred)?,
                    auc: auc.macro_auc,
                    skipped_pairs: auc.skipped.len(),
                })
            })
            .map(|r| r.map_err(|e| e.to_string()))
            .collect()
    }

    fn summarize(
        &self,
        cell: CellKey,
        data: &WindowData,
        stride: usize,
        scores: Vec<FoldScore>,
    ) -> MetricsReport {
        let n = scores.len() as f64;
        let mut confusion = ConfusionMatrix::default();
        let mut sums = [(0.0, 0.0, 0.0); CLASSES];
        let mut undefined = [0usize; CLASSES];
        let mut fold_accuracy = Vec::new();
        let mut fold_auc = Vec::new();
        let mut flags = Vec::new();
        for (i, s) in scores.iter().enumerate() {
            confusion.add(&s.confusion);
            fold_accuracy.push(s.confusion.accuracy().unwrap_or(0.0));
            fold_auc.push(s.auc);
            if s.skipped_pairs > 0 {
                flags.push(format!("fold {i}: {} class pairs missing from AUC", s.skipped_pairs));
            }
            for (c, cs) in prf_per_class(&s.confusion).iter().enumerate() {
                sums[c].0 += cs.precision;
                sums[c].1 += cs.recall;
                sums[c].2 += cs.f1;
                if cs.precision_undefined || cs.recall_undefined || cs.f1_undefined {
                    undefined[c] += 1;
                }
            }
        }
        for (c, &u) in undefined.iter().enumerate() {
            if u > 0 {
                flags.push(format!(
                    "{}: 0/0 metric reported as 0 in {u} folds",
                    InteractionClass::from_index(c).unwrap()
                ));
            }
        }
        let accuracy = fold_accuracy.iter().sum::<f64>() / n;
        let accuracy_std = (fold_accuracy.iter().map(|a| (a - accuracy).powi(2)).sum::<f64>() / n).sqrt();
        let defined: Vec<f64> = fold_auc.iter().flatten().copied().collect();
        let ovo_auc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        let mut class_counts = [0usize; CLASSES];
        for (fv, &syn) in data.features.iter().zip(&data.synthetic) {
            if !syn {
                class_counts[fv.label.index()] += 1;
            }
        }
        MetricsReport {
            cell,
            provenance: Provenance {
                window_size: cell.window,
                stride,
                feature_mode: cell.feature_mode,
                algorithm: cell.algorithm,
                seed: self.seed,
                fold_seed: self.fold_seed(cell.window),
                folds: self.folds,
                repeats: self.repeats,
                grouping: self.grouping,
                smote: self.smote,
                smote_k: self.smote_k,
                min_max_scaling: self.min_max_scaling,
                knn_k: (cell.algorithm == Algorithm::Knn).then_some(self.knn_k),
                forest: (cell.algorithm == Algorithm::Rf).then_some(ForestParams { seed: 0, ..self.forest }),
                features: self.features,
            },
            n_observations: class_counts.iter().sum(),
            class_counts,
            feature_dim: data.features.first().map_or(0, |fv| fv.values.len()),
            per_class: std::array::from_fn(|c| ClassSummary {
                class: InteractionClass::from_index(c).unwrap(),
                precision: sums[c].0 / n,
                recall: sums[c].1 / n,
                f1: sums[c].2 / n,
                support: confusion.row_sum(c),
                undefined_folds: undefined[c],
            }),
            accuracy,
            accuracy_std,
            ovo_auc,
            pooled_accuracy: confusion.accuracy().unwrap_or(0.0),
            confusion,
            fold_accuracy,
            fold_auc,
            flags,
        }
    }
}

/// Runs every cell of `grid`. A failing cell is recorded in `failures`
/// and the rest of the grid continues.
pub fn run_experiment_grid(recordings: &[Recording], grid: &GridSpec, cv: &CvConfig) -> Result<GridResult> {
    cv.validate()?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let fail_all = |failures: &mut Vec<CellFailure>, cells: &[CellKey], e: &PhriError| {
        for &cell in cells {
            failures.push(CellFailure {
                cell,
                error: e.to_string(),
            });
        }
    };
    for &window in &grid.windows {
        let cells_of = |mode: Option<FeatureMode>| -> Vec<CellKey> {
            grid.cells()
                .into_iter()
                .filter(|c| c.window == window && mode.is_none_or(|m| c.feature_mode == m))
                .collect()
        };
        let stride = cv.stride.unwrap_or(window);
        let dataset = match LabeledDataset::from_recordings(recordings, window, stride) {
            Ok(d) => d,
            Err(e) => {
                fail_all(&mut failures, &cells_of(None), &e);
                continue;
            }
        };
        log::info!("window {window}: {} observations", dataset.len());

        let mut prepared = Vec::new();
        for &mode in &grid.feature_modes {
            match cv.prepare(&dataset, window, mode).and_then(|data| {
                let labels: Vec<InteractionClass> = data.features.iter().map(|fv| fv.label).collect();
                let plan = stratified_group_kfold(&labels, &data.groups, cv.folds, cv.repeats, cv.fold_seed(window))?;
                Ok((data, plan))
            }) {
                Ok((data, plan)) => prepared.push((mode, data, plan)),
                Err(e) => fail_all(&mut failures, &cells_of(Some(mode)), &e),
            }
        }

        let jobs: Vec<(usize, usize, usize)> = (0..prepared.len())
            .flat_map(|m| (0..cv.repeats).flat_map(move |r| (0..cv.folds).map(move |f| (m, r, f))))
            .collect();
        let results = par::map(&jobs, |&(m, r, f)| {
            let (mode, data, plan) = &prepared[m];
            cv.run_fold(data, plan, (window, *mode, r, f), &grid.algorithms)
        });

        let mut per_cell: BTreeMap<(usize, usize), std::result::Result<Vec<FoldScore>, String>> = BTreeMap::new();
        for (&(m, _, _), fold) in jobs.iter().zip(results) {
            for (a, res) in fold.into_iter().enumerate() {
                let entry = per_cell.entry((m, a)).or_insert_with(|| Ok(Vec::new()));
                match (entry.as_mut(), res) {
                    (Ok(v), Ok(s)) => v.push(s),
                    (Ok(_), Err(e)) => *entry = Err(e),
                    (Err(_), _) => {}
                }
            }
        }
        for (m, (mode, data, _)) in prepared.iter().enumerate() {
            for (a, &algorithm) in grid.algorithms.iter().enumerate() {
                let cell = CellKey {
                    window,
                    feature_mode: *mode,
                    algorithm,
                };
                match per_cell.remove(&(m, a)) {
                    Some(Ok(scores)) => reports.push(cv.summarize(cell, data, stride, scores)),
                    Some(Err(error)) => failures.push(CellFailure { cell, error }),
                    None => unreachable!("every prepared cell has fold jobs"),
                }
            }
        }
    }
    let order: BTreeMap<CellKey, usize> = grid.cells().into_iter().enumerate().map(|(i, c)| (c, i)).collect();
    reports.sort_by_key(|r| order[&r.cell]);
    failures.sort_by_key(|f| order[&f.cell]);
    Ok(GridResult { reports, failures })
}
