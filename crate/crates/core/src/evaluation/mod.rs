//! Cross-validation, metrics and the window × features × algorithm grid.

pub mod folds;
pub mod grid;
pub mod metrics;

pub use folds::{stratified_group_kfold, stratified_kfold, FoldPlan, DEFAULT_FOLDS, DEFAULT_REPEATS};
pub use grid::{
    run_experiment_grid, CellFailure, CellKey, ClassSummary, CvConfig, GridResult, GridSpec, Grouping, MetricsReport,
    Provenance, SmoteMode, SweepPoint,
};
pub use metrics::{binary_auc, confusion_matrix, ovo_auc, prf_per_class, AucSummary, ClassScores, ConfusionMatrix};
