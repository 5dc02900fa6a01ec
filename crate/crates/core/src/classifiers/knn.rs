//! Brute-force k-nearest-neighbour classifier under Euclidean distance.

use serde::{Deserialize, Serialize};

use super::{check_dim, training_dim, Proba};
use crate::dataset::InteractionClass;
use crate::error::{PhriError, Result};
use crate::features::FeatureVector;

pub const DEFAULT_KNN_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    n_features: usize,
    /// Row-major training matrix.
    rows: Vec<f64>,
    labels: Vec<InteractionClass>,
}

/// Stores the training set. Fails when `k` is 0 or exceeds the row count.
pub fn knn_fit(train: &[FeatureVector], k: usize) -> Result<KnnModel> {
    let d = training_dim(train)?;
    if k == 0 || k > train.len() {
        return Err(PhriError::KOutOfRange { k, n: train.len() });
    }
    let mut rows = Vec::with_capacity(d * train.len());
    for fv in train {
        rows.extend_from_slice(&fv.values);
    }
    Ok(KnnModel {
        k,
        n_features: d,
        rows,
        labels: train.iter().map(|fv| fv.label).collect(),
    })
}

impl KnnModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_train(&self) -> usize {
        self.labels.len()
    }

    /// Training indices of the `k` neighbours of `x`, nearest first.
    /// Equal distances order by label encoding, then by training index.
    pub fn neighbors(&self, x: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.n_features, x)?;
        // Sorted best-so-far list; a row is dropped as soon as its partial
        // distance exceeds the current k-th best. Partial sums only grow, so
        // the result is exact.
        let mut best: Vec<(f64, u8, u32)> = Vec::with_capacity(self.k + 1);
        let key = |a: &(f64, u8, u32), b: &(f64, u8, u32)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        };
        for (i, row) in self.rows.chunks_exact(self.n_features).enumerate() {
            let bound = if best.len() == self.k { best[self.k - 1].0 } else { f64::INFINITY };
            let Some(d) = bounded_distance(x, row, bound) else {
                continue;
            };
            let cand = (d, self.labels[i].index() as u8, i as u32);
            if best.len() == self.k && key(&cand, &best[self.k - 1]).is_ge() {
                continue;
            }
            let pos = best.partition_point(|b| key(b, &cand).is_lt());
            best.insert(pos, cand);
            best.truncate(self.k);
        }
        Ok(best.into_iter().map(|c| c.2 as usize).collect())
    }

    /// Vote fractions among the `k` nearest training rows.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Proba> {
        let mut p = [0.0; InteractionClass::COUNT];
        for i in self.neighbors(x)? {
            p[self.labels[i].index()] += 1.0;
        }
        for v in &mut p {
            *v /= self.k as f64;
        }
        Ok(p)
    }
}

/// Squared distance, or `None` once it provably exceeds `bound`.
/// Accumulates in the same order as `squared_distance`, so a completed
/// result is bit-identical to it.
fn bounded_distance(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    const BLOCK: usize = 16;
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (n, (x, y)) in ca.zip(cb).enumerate() {
        for k in 0..4 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
        if n % BLOCK == BLOCK - 1 && (acc[0] + acc[1]) + (acc[2] + acc[3]) > bound {
            return None;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    Some((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{check_proba, predict_label};
    use crate::features::FeatureLayout;
    use proptest::prelude::*;
    use InteractionClass::*;

    fn fv(values: Vec<f64>, label: InteractionClass) -> FeatureVector {
        FeatureVector {
            values,
            layout: FeatureLayout::Abstract,
            label,
        }
    }

    #[test]
    fn k_bounds() {
        let train = vec![fv(vec![0.0], Null), fv(vec![1.0], Drop)];
        assert!(matches!(knn_fit(&train, 0), Err(PhriError::KOutOfRange { .. })));
        assert!(matches!(knn_fit(&train, 3), Err(PhriError::KOutOfRange { k: 3, n: 2 })));
        assert!(matches!(knn_fit(&[], 1), Err(PhriError::EmptyTrainingSet)));
        assert!(knn_fit(&train, 2).is_ok());
    }

    #[test]
    fn ragged_training_rows_are_rejected() {
        let train = vec![fv(vec![0.0], Null), fv(vec![1.0, 2.0], Drop)];
        assert!(matches!(knn_fit(&train, 1), Err(PhriError::DimensionMismatch { .. })));
    }

    #[test]
    fn duplicate_points_with_conflicting_labels_pick_lowest_encoding() {
        let train = vec![fv(vec![1.0, 1.0], Squeeze), fv(vec![1.0, 1.0], Drop), fv(vec![5.0, 5.0], Null)];
        let m = knn_fit(&train, 1).unwrap();
        let p = m.predict_proba(&[1.0, 1.0]).unwrap();
        assert_eq!(p, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(predict_label(&p).unwrap(), Drop);
    }

    #[test]
    fn proba_is_vote_fraction() {
        let train = vec![
            fv(vec![0.0], Null),
            fv(vec![0.1], Null),
            fv(vec![0.2], Handle),
            fv(vec![9.0], Drop),
            fv(vec![9.1], Drop),
        ];
        let m = knn_fit(&train, 3).unwrap();
        let p = m.predict_proba(&[0.05]).unwrap();
        assert_eq!(p, [2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0]);
        check_proba(&p).unwrap();
        assert_eq!(m.neighbors(&[9.02]).unwrap(), vec![3, 4, 2]);
        assert!(m.predict_proba(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]];
        let mut train = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for j in 0..10 {
                let dx = (j as f64 * 0.37).sin();
                let dy = (j as f64 * 0.91).cos();
                train.push(fv(vec![center[0] + dx, center[1] + dy], InteractionClass::from_index(c).unwrap()));
            }
        }
        let m = knn_fit(&train, 5).unwrap();
        for (c, center) in centers.iter().enumerate() {
            let p = m.predict_proba(center).unwrap();
            assert_eq!(predict_label(&p).unwrap().index(), c);
        }
    }

    proptest! {
        #[test]
        fn pruned_search_matches_full_sort(
            rows in proptest::collection::vec((proptest::collection::vec(-3i32..3, 70), 0usize..4), 1..40),
            probe in proptest::collection::vec(-3i32..3, 70),
            k in 1usize..8,
        ) {
            // Small integer grid so distance ties are frequent.
            let train: Vec<FeatureVector> = rows
                .iter()
                .map(|(v, c)| fv(v.iter().map(|&x| x as f64).collect(), InteractionClass::from_index(*c).unwrap()))
                .collect();
            let k = k.min(train.len());
            let m = knn_fit(&train, k).unwrap();
            let x: Vec<f64> = probe.iter().map(|&v| v as f64).collect();
            let mut all: Vec<(f64, usize, usize)> = train
                .iter()
                .enumerate()
                .map(|(i, t)| (t.values.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum(), t.label.index(), i))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let expected: Vec<usize> = all[..k].iter().map(|e| e.2).collect();
            prop_assert_eq!(m.neighbors(&x).unwrap(), expected);
        }
    }

    #[test]
    fn json_roundtrip() {
        let train = vec![fv(vec![0.25, -1.5], Null), fv(vec![1.0 / 3.0, 2.0], Handle)];
        let m = knn_fit(&train, 2).unwrap();
        let back: KnnModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
