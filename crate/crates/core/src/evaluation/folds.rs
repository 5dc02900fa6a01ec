//! Repeated stratified k-fold splits, optionally keeping every window of a
//! recording inside one fold.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::InteractionClass;
use crate::error::{PhriError, Result};
use crate::rng::stream;

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_REPEATS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub n: usize,
    /// `folds[repeat][fold]` holds sorted validation indices.
    folds: Vec<Vec<Vec<usize>>>,
}

impl FoldPlan {
    pub fn validation(&self, repeat: usize, fold: usize) -> &[usize] {
        &self.folds[repeat][fold]
    }

    /// Every index outside the validation fold, ascending.
    pub fn training(&self, repeat: usize, fold: usize) -> Vec<usize> {
        let mut held = vec![false; self.n];
        for &i in self.validation(repeat, fold) {
            held[i] = true;
        }
        (0..self.n).filter(|&i| !held[i]).collect()
    }

    /// `(repeat, fold)` pairs in evaluation order.
    pub fn splits(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.repeats).flat_map(move |r| (0..self.k).map(move |f| (r, f)))
    }
}

/// Stratified folds over individual observations.
pub fn stratified_kfold(labels: &[InteractionClass], k: usize, repeats: usize, seed: u64) -> Result<FoldPlan> {
    let groups: Vec<usize> = (0..labels.len()).collect();
    stratified_group_kfold(labels, &groups, k, repeats, seed)
}

/// Stratified folds over groups: all members of a group share a fold.
///
/// Groups are shuffled within their class, then each goes to the fold
/// holding the fewest observations of that class, ties broken by total
/// fold size and then by fold index.
pub fn stratified_group_kfold(
    labels: &[InteractionClass],
    groups: &[usize],
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if labels.len() != groups.len() {
        return Err(PhriError::LengthMismatch {
            left: labels.len(),
            right: groups.len(),
        });
    }
    if k < 2 || repeats == 0 {
        return Err(PhriError::InvalidFoldCount(k));
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    let mut by_class: BTreeMap<InteractionClass, Vec<usize>> = BTreeMap::new();
    for (&g, idx) in &members {
        let label = labels[idx[0]];
        if idx.iter().any(|&i| labels[i] != label) {
            return Err(PhriError::InvalidConfig(format!("group {g} mixes class labels")));
        }
        by_class.entry(label).or_default().push(g);
    }
    for (&class, gs) in &by_class {
        if gs.len() < k {
            return Err(PhriError::ClassTooSmall {
                class,
                count: gs.len(),
                needed: k,
            });
        }
    }

    let folds = (0..repeats)
        .map(|r| {
            let mut rng = stream(seed, &[r as u64]);
            let mut out = vec![Vec::new(); k];
            let mut total = vec![0usize; k];
            for gs in by_class.values() {
                let mut order = gs.clone();
                order.shuffle(&mut rng);
                let mut class_load = vec![0usize; k];
                for g in order {
                    let f = (0..k)
                        .min_by_key(|&f| (class_load[f], total[f], f))
                        .expect("k >= 2");
                    let idx = &members[&g];
                    class_load[f] += idx.len();
                    total[f] += idx.len();
                    out[f].extend_from_slice(idx);
                }
            }
            for fold in &mut out {
                fold.sort_unstable();
            }
            out
        })
        .collect();
    Ok(FoldPlan {
        k,
        repeats,
        seed,
        n: labels.len(),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use InteractionClass::*;

    fn labels_from(counts: [usize; 4]) -> Vec<InteractionClass> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(InteractionClass::from_index(c).unwrap(), n))
            .collect()
    }

    #[test]
    fn rejects_bad_fold_counts() {
        let labels = labels_from([10, 10, 10, 10]);
        assert!(matches!(stratified_kfold(&labels, 1, 1, 0), Err(PhriError::InvalidFoldCount(1))));
        assert!(matches!(stratified_kfold(&labels, 5, 0, 0), Err(PhriError::InvalidFoldCount(5))));
        let small = labels_from([10, 3, 10, 10]);
        assert!(matches!(
            stratified_kfold(&small, 5, 1, 0),
            Err(PhriError::ClassTooSmall { class: Drop, count: 3, needed: 5 })
        ));
    }

    #[test]
    fn even_and_uneven_class_dealing() {
        let plan = stratified_kfold(&labels_from([25, 25, 25, 25]), 5, 1, 3).unwrap();
        for f in 0..5 {
            assert_eq!(plan.validation(0, f).len(), 20);
        }
        let labels = labels_from([26, 10, 10, 10]);
        let plan = stratified_kfold(&labels, 5, 1, 3).unwrap();
        let mut sizes: Vec<usize> = (0..5)
            .map(|f| plan.validation(0, f).iter().filter(|&&i| labels[i] == Null).count())
            .collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![5, 5, 5, 5, 6]);
    }

    #[test]
    fn groups_stay_together() {
        let labels = labels_from([12, 12, 0, 0]);
        let groups: Vec<usize> = (0..24).map(|i| i / 3).collect();
        let plan = stratified_group_kfold(&labels, &groups, 2, 2, 5).unwrap();
        for (r, f) in plan.splits() {
            let val = plan.validation(r, f);
            for &i in val {
                for j in 0..24 {
                    if groups[j] == groups[i] {
                        assert!(val.contains(&j));
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_label_group_is_rejected() {
        let labels = vec![Null, Drop, Null, Drop];
        assert!(stratified_group_kfold(&labels, &[0, 0, 1, 1], 2, 1, 0).is_err());
    }

    #[test]
    fn repeats_differ_and_seeds_reproduce() {
        let labels = labels_from([20, 15, 25, 5]);
        let a = stratified_kfold(&labels, 5, 3, 9).unwrap();
        assert_eq!(a, stratified_kfold(&labels, 5, 3, 9).unwrap());
        assert_ne!(a.validation(0, 0), a.validation(1, 0));
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(
            counts in proptest::array::uniform4(5usize..40),
            k in 2usize..6,
            seed in any::<u64>(),
        ) {
            let labels = labels_from(counts);
            let plan = stratified_kfold(&labels, k, 2, seed).unwrap();
            for r in 0..2 {
                let mut seen = vec![0usize; labels.len()];
                let mut sizes = Vec::new();
                for f in 0..k {
                    let val = plan.validation(r, f);
                    sizes.push(val.len());
                    for &i in val {
                        seen[i] += 1;
                    }
                    for (c, &n) in counts.iter().enumerate() {
                        let in_fold = val.iter().filter(|&&i| labels[i].index() == c).count();
                        prop_assert!(in_fold == n / k || in_fold == n.div_ceil(k));
                    }
                    let train = plan.training(r, f);
                    prop_assert_eq!(train.len() + val.len(), labels.len());
                    prop_assert!(train.iter().all(|i| val.binary_search(i).is_err()));
                }
                prop_assert!(seen.iter().all(|&s| s == 1));
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }
    }
}
