//! Confusion matrices, per-class precision/recall/F1 and one-vs-one AUC.

use serde::{Deserialize, Serialize};

use crate::classifiers::{check_proba, Proba};
use crate::dataset::InteractionClass;
use crate::error::{PhriError, Result};

const CLASSES: usize = InteractionClass::COUNT;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; CLASSES]; CLASSES]);

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..CLASSES).map(|c| self.0[c][c]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.0[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.0.iter().map(|r| r[c]).sum()
    }

    /// Fraction on the diagonal; `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.trace() as f64 / t as f64)
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.0.iter_mut().zip(&other.0) {
            for (v, w) in row.iter_mut().zip(o) {
                *v += w;
            }
        }
    }
}

pub fn confusion_matrix(truth: &[InteractionClass], predicted: &[InteractionClass]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(PhriError::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        cm.0[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

/// One class's scores. A 0/0 ratio is reported as 0 and flagged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (0.0, true)
    } else {
        (num / den, false)
    }
}

pub fn prf_per_class(cm: &ConfusionMatrix) -> [ClassScores; CLASSES] {
    std::array::from_fn(|c| {
        let tp = cm.0[c][c] as f64;
        let (precision, precision_undefined) = ratio(tp, cm.col_sum(c) as f64);
        let (recall, recall_undefined) = ratio(tp, cm.row_sum(c) as f64);
        let (f1, f1_undefined) = ratio(2.0 * precision * recall, precision + recall);
        ClassScores {
            precision,
            recall,
            f1,
            support: cm.row_sum(c),
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairAuc {
    pub a: InteractionClass,
    pub b: InteractionClass,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    /// Mean over the scored pairs; `None` when no pair could be scored.
    pub macro_auc: Option<f64>,
    pub pairs: Vec<PairAuc>,
    /// Pairs skipped because one side had no samples.
    pub skipped: Vec<(InteractionClass, InteractionClass)>,
}

/// Probability that a random positive outscores a random negative, ties 0.5,
/// computed from midranks.
pub fn binary_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += midrank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

/// Macro one-vs-one AUC: each class pair averages the AUC of either class's
/// score at separating the two, and the macro value averages the pairs.
pub fn ovo_auc(truth: &[InteractionClass], proba: &[Proba]) -> Result<AucSummary> {
    if truth.len() != proba.len() {
        return Err(PhriError::LengthMismatch {
            left: truth.len(),
            right: proba.len(),
        });
    }
    for p in proba {
        check_proba(p)?;
    }
    let scores = |class: usize, score_of: usize| -> Vec<f64> {
        truth
            .iter()
            .zip(proba)
            .filter(|(t, _)| t.index() == class)
            .map(|(_, p)| p[score_of])
            .collect()
    };
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for a in 0..CLASSES {
        for b in a + 1..CLASSES {
            let (ca, cb) = (InteractionClass::from_index(a).unwrap(), InteractionClass::from_index(b).unwrap());
            let (a_on_a, b_on_a) = (scores(a, a), scores(b, a));
            if a_on_a.is_empty() || b_on_a.is_empty() {
                skipped.push((ca, cb));
                continue;
            }
            let auc_a = binary_auc(&a_on_a, &b_on_a);
            let auc_b = binary_auc(&scores(b, b), &scores(a, b));
            pairs.push(PairAuc {
                a: ca,
                b: cb,
                auc: (auc_a + auc_b) / 2.0,
            });
        }
    }
    let macro_auc = (!pairs.is_empty()).then(|| pairs.iter().map(|p| p.auc).sum::<f64>() / pairs.len() as f64);
    Ok(AucSummary {
        macro_auc,
        pairs,
        skipped,
    })
}
