//! Random forest of exact-Gini CART trees grown on bootstrap samples.
//!
//! Each tree owns an RNG stream derived from `(seed, tree)`, and each node
//! derives its own stream from its path, so a depth-limited tree is a
//! truncation of the unlimited one and parallel training is reproducible.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, training_dim, Proba};
use crate::dataset::InteractionClass;
use crate::error::{PhriError, Result};
use crate::features::FeatureVector;
use crate::par;
use crate::rng::{derive_seed, stream};

const CLASSES: usize = InteractionClass::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(c) => c,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(PhriError::InvalidConfig("forest needs at least one tree".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(PhriError::InvalidConfig("min_samples_leaf must be >= 1".into()));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(PhriError::InvalidConfig("max_features must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    /// Training sample counts per class reaching this leaf.
    Leaf { counts: [u32; CLASSES] },
}

impl TreeNode {
    fn leaf<'a>(&'a self, x: &[f64]) -> &'a [u32; CLASSES] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
                TreeNode::Leaf { counts } => return counts,
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
            TreeNode::Leaf { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
}

impl DecisionTree {
    /// Grows one tree on every row of `train` (no bootstrap).
    pub fn fit(train: &[FeatureVector], params: &ForestParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let data = Columns::new(train)?;
        let weights = vec![1u32; train.len()];
        Ok(data.grow(&weights, params, seed))
    }

    /// Class distribution of the leaf `x` falls in.
    pub fn predict_proba(&self, x: &[f64]) -> Proba {
        let counts = self.root.leaf(x);
        let total: u32 = counts.iter().sum();
        std::array::from_fn(|c| counts[c] as f64 / total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean of the per-tree leaf distributions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Proba> {
        check_dim(self.n_features, x)?;
        let mut p = [0.0; CLASSES];
        for tree in &self.trees {
            for (acc, v) in p.iter_mut().zip(tree.predict_proba(x)) {
                *acc += v;
            }
        }
        let n = self.trees.len() as f64;
        for v in &mut p {
            *v /= n;
        }
        Ok(p)
    }

    /// Majority vote of the per-tree argmax labels; ties to the lowest encoding.
    pub fn predict_vote(&self, x: &[f64]) -> Result<InteractionClass> {
        check_dim(self.n_features, x)?;
        let mut votes = [0usize; CLASSES];
        for tree in &self.trees {
            let label = super::predict_label(&tree.predict_proba(x))?;
            votes[label.index()] += 1;
        }
        let best = (0..CLASSES).fold(0, |b, c| if votes[c] > votes[b] { c } else { b });
        Ok(InteractionClass::from_index(best).expect("index below class count"))
    }
}

pub fn fit_forest(train: &[FeatureVector], params: &ForestParams) -> Result<ForestModel> {
    params.validate()?;
    let data = Columns::new(train)?;
    let n = train.len();
    let trees = par::map_range(params.n_trees, |t| {
        let weights = if params.bootstrap {
            let mut rng = stream(params.seed, &[t as u64, 0]);
            let mut w = vec![0u32; n];
            for _ in 0..n {
                w[rng.random_range(0..n)] += 1;
            }
            w
        } else {
            vec![1u32; n]
        };
        data.grow(&weights, params, derive_seed(params.seed, &[t as u64, 1]))
    });
    Ok(ForestModel {
        params: *params,
        n_features: data.cols.len(),
        trees,
    })
}

/// Column-major copy of the training matrix with per-column value ranks,
/// so node sorting runs on packed integers.
struct Columns {
    cols: Vec<Vec<f64>>,
    /// `ranks[f][i]` indexes `distinct[f]`.
    ranks: Vec<Vec<u32>>,
    distinct: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

/// `n * gini` for weighted class counts.
fn impurity(counts: &[u64; CLASSES], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: u64 = counts.iter().map(|c| c * c).sum();
    n as f64 - sq as f64 / n as f64
}

struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    data: &'a Columns,
    weights: &'a [u32],
    params: &'a ForestParams,
    mtry: usize,
    buf: Vec<u64>,
}

impl Columns {
    fn new(train: &[FeatureVector]) -> Result<Self> {
        let d = training_dim(train)?;
        if let Some(bad) = train.iter().find(|fv| fv.values.iter().any(|v| !v.is_finite())) {
            return Err(PhriError::InvalidConfig(format!(
                "non-finite feature value in a {} row",
                bad.label
            )));
        }
        let cols: Vec<Vec<f64>> = (0..d).map(|j| train.iter().map(|fv| fv.values[j]).collect()).collect();
        let mut ranks = Vec::with_capacity(d);
        let mut distinct = Vec::with_capacity(d);
        for col in &cols {
            let mut vals = col.clone();
            vals.sort_by(f64::total_cmp);
            vals.dedup_by(|a, b| a == b);
            ranks.push(
                col.iter()
                    .map(|v| vals.partition_point(|u| u < v) as u32)
                    .collect(),
            );
            distinct.push(vals);
        }
        Ok(Self {
            cols,
            ranks,
            distinct,
            labels: train.iter().map(|fv| fv.label.index() as u8).collect(),
        })
    }

    fn grow(&self, weights: &[u32], params: &ForestParams, seed: u64) -> DecisionTree {
        let mut idx: Vec<u32> = (0..weights.len() as u32).filter(|&i| weights[i as usize] > 0).collect();
        let mut g = Grower {
            data: self,
            weights,
            params,
            mtry: params.max_features.resolve(self.cols.len()),
            buf: Vec::with_capacity(idx.len()),
        };
        DecisionTree {
            root: g.build(&mut idx, 0, seed),
        }
    }
}

impl Grower<'_> {
    fn counts(&self, idx: &[u32]) -> [u64; CLASSES] {
        let mut c = [0u64; CLASSES];
        for &i in idx {
            c[self.data.labels[i as usize] as usize] += self.weights[i as usize] as u64;
        }
        c
    }

    fn build(&mut self, idx: &mut [u32], depth: usize, seed: u64) -> TreeNode {
        let counts = self.counts(idx);
        let total: u64 = counts.iter().sum();
        let leaf = TreeNode::Leaf {
            counts: counts.map(|c| c as u32),
        };
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let min_leaf = self.params.min_samples_leaf as u64;
        if pure || total < 2 * min_leaf || self.params.max_depth.is_some_and(|d| depth >= d) {
            return leaf;
        }
        let parent = impurity(&counts, total);
        let Some(best) = self.best_split(idx, &counts, total, seed) else {
            return leaf;
        };
        if best.score >= parent - 1e-12 * total as f64 {
            return leaf;
        }
        let col = &self.data.cols[best.feature];
        let mut split = 0;
        for i in 0..idx.len() {
            if col[idx[i] as usize] <= best.threshold {
                idx.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1, derive_seed(seed, &[0]));
        let right = self.build(r, depth + 1, derive_seed(seed, &[1]));
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Draws features without replacement until `mtry` non-constant ones
    /// have been scored; returns the lowest weighted child impurity.
    fn best_split(&mut self, idx: &[u32], counts: &[u64; CLASSES], total: u64, seed: u64) -> Option<Best> {
        let d = self.data.cols.len();
        let mut rng = stream(seed, &[]);
        let mut order: Vec<usize> = (0..d).collect();
        let mut best: Option<Best> = None;
        let mut scored = 0;
        for i in 0..d {
            if scored == self.mtry {
                break;
            }
            let j = rng.random_range(i..d);
            order.swap(i, j);
            let f = order[i];
            let Some((score, threshold)) = self.score_feature(f, idx, counts, total) else {
                continue;
            };
            scored += 1;
            if best.as_ref().is_none_or(|b| score < b.score) {
                best = Some(Best {
                    score,
                    feature: f,
                    threshold,
                });
            }
        }
        best
    }

    /// Best `(n * weighted gini, threshold)` on feature `f`, or `None` when
    /// the feature is constant on this node or no split respects the leaf size.
    fn score_feature(&mut self, f: usize, idx: &[u32], counts: &[u64; CLASSES], total: u64) -> Option<(f64, f64)> {
        let ranks = &self.data.ranks[f];
        let weights = self.weights;
        let labels = &self.data.labels;
        self.buf.clear();
        self.buf.extend(idx.iter().map(|&i| {
            let i = i as usize;
            ((ranks[i] as u64) << 32) | ((weights[i] as u64) << 2) | labels[i] as u64
        }));
        self.buf.sort_unstable();
        let buf = &self.buf;
        let rank = |e: u64| (e >> 32) as usize;
        if rank(*buf.first()?) == rank(*buf.last()?) {
            return None;
        }
        let min_leaf = self.params.min_samples_leaf as u64;
        let mut left = [0u64; CLASSES];
        let mut n_left = 0u64;
        let mut best: Option<(f64, usize)> = None;
        for p in 0..buf.len() - 1 {
            let w = (buf[p] & 0xFFFF_FFFF) >> 2;
            left[(buf[p] & 3) as usize] += w;
            n_left += w;
            if rank(buf[p]) == rank(buf[p + 1]) {
                continue;
            }
            let n_right = total - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let right: [u64; CLASSES] = std::array::from_fn(|c| counts[c] - left[c]);
            let score = impurity(&left, n_left) + impurity(&right, n_right);
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, p));
            }
        }
        let (score, p) = best?;
        let lo = self.data.distinct[f][rank(buf[p])];
        let hi = self.data.distinct[f][rank(buf[p + 1])];
        let mid = lo + (hi - lo) / 2.0;
        let threshold = if mid >= lo && mid < hi { mid } else { lo };
        Some((score, threshold))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{check_proba, predict_label, TrainedModel};
    use crate::features::{FeatureLayout, FeatureMode};
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn fv(values: Vec<f64>, label: usize) -> FeatureVector {
        FeatureVector {
            values,
            layout: FeatureLayout::Abstract,
            label: InteractionClass::from_index(label).unwrap(),
        }
    }

    fn blobs(per_class: usize, spread: f64, seed: u64) -> Vec<FeatureVector> {
        let centers = [[0.0, 0.0, 0.0], [4.0, 0.0, 1.0], [0.0, 4.0, -1.0], [4.0, 4.0, 0.0]];
        let noise = Normal::new(0.0, spread).unwrap();
        let mut rng = stream(seed, &[]);
        let mut out = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per_class {
                out.push(fv(center.iter().map(|m| m + noise.sample(&mut rng)).collect(), c));
            }
        }
        out
    }

    fn accuracy(model: &ForestModel, data: &[FeatureVector]) -> f64 {
        let hits = data
            .iter()
            .filter(|r| predict_label(&model.predict_proba(&r.values).unwrap()).unwrap() == r.label)
            .count();
        hits as f64 / data.len() as f64
    }

    fn small(seed: u64) -> ForestParams {
        ForestParams {
            n_trees: 15,
            seed,
            ..ForestParams::default()
        }
    }

    #[test]
    fn ranks_index_sorted_distinct_values() {
        let train = vec![fv(vec![3.0], 0), fv(vec![-1.0], 1), fv(vec![3.0], 2), fv(vec![0.5], 3)];
        let c = Columns::new(&train).unwrap();
        assert_eq!(c.distinct[0], vec![-1.0, 0.5, 3.0]);
        assert_eq!(c.ranks[0], vec![2, 0, 2, 1]);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(36), 6);
        assert_eq!(MaxFeatures::Sqrt.resolve(120), 11);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
        assert_eq!(MaxFeatures::Count(50).resolve(7), 7);
    }

    #[test]
    fn single_split_uses_midpoint_and_left_closed_rule() {
        let train = vec![fv(vec![1.0], 0), fv(vec![2.0], 0), fv(vec![4.0], 3), fv(vec![6.0], 3)];
        let params = ForestParams {
            bootstrap: false,
            ..ForestParams::default()
        };
        let tree = DecisionTree::fit(&train, &params, 0).unwrap();
        match &tree.root {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 3.0);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(tree.predict_proba(&[3.0]), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(tree.predict_proba(&[3.0000001]), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn adjacent_floats_fall_back_to_lower_value() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let train = vec![fv(vec![a], 0), fv(vec![b], 1)];
        let tree = DecisionTree::fit(&train, &ForestParams::default(), 0).unwrap();
        let TreeNode::Split { threshold, .. } = tree.root else {
            panic!("expected a split")
        };
        assert!(threshold >= a && threshold < b);
        assert_eq!(tree.predict_proba(&[a])[0], 1.0);
        assert_eq!(tree.predict_proba(&[b])[1], 1.0);
    }

    #[test]
    fn identical_rows_with_mixed_labels_become_a_leaf() {
        let train = vec![fv(vec![1.0, 1.0], 0), fv(vec![1.0, 1.0], 2), fv(vec![1.0, 1.0], 2)];
        let tree = DecisionTree::fit(&train, &ForestParams::default(), 0).unwrap();
        assert_eq!(tree.root, TreeNode::Leaf { counts: [1, 0, 2, 0] });
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let train = blobs(20, 1.0, 3);
        let params = ForestParams {
            min_samples_leaf: 7,
            bootstrap: false,
            ..ForestParams::default()
        };
        let tree = DecisionTree::fit(&train, &params, 1).unwrap();
        fn check(node: &TreeNode) {
            match node {
                TreeNode::Leaf { counts } => assert!(counts.iter().sum::<u32>() >= 7),
                TreeNode::Split { left, right, .. } => {
                    check(left);
                    check(right);
                }
            }
        }
        check(&tree.root);
    }

    #[test]
    fn separable_blobs_train_to_full_accuracy() {
        let train = blobs(40, 0.5, 1);
        let model = fit_forest(&train, &small(7)).unwrap();
        assert_eq!(accuracy(&model, &train), 1.0);
        let test = blobs(40, 0.5, 2);
        assert!(accuracy(&model, &test) > 0.97);
    }

    #[test]
    fn same_seed_same_forest() {
        let train = blobs(15, 1.5, 4);
        let a = fit_forest(&train, &small(11)).unwrap();
        let b = fit_forest(&train, &small(11)).unwrap();
        let c = fit_forest(&train, &small(12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn depth_limit_truncates_the_full_tree() {
        let train = blobs(25, 2.0, 5);
        let full = fit_forest(&train, &small(3)).unwrap();
        let mut last = 0.0;
        for depth in [0, 1, 2, 3, 5, 8] {
            let params = ForestParams {
                max_depth: Some(depth),
                ..small(3)
            };
            let limited = fit_forest(&train, &params).unwrap();
            assert!(limited.trees.iter().all(|t| t.root.depth() <= depth));
            let acc = accuracy(&limited, &train);
            assert!(acc >= last, "depth {depth}: {acc} < {last}");
            last = acc;
        }
        assert!(accuracy(&full, &train) >= last);
    }

    #[test]
    fn model_document_roundtrips_through_json() {
        let train = blobs(30, 2.0, 6);
        let model = fit_forest(&train, &small(9)).unwrap();
        let doc = TrainedModel {
            version: TrainedModel::VERSION,
            window_size: 30,
            feature_mode: FeatureMode::Abstract,
            layout: FeatureLayout::Abstract,
            scaler: None,
            classifier: crate::classifiers::Classifier::Rf(model),
        };
        let back = TrainedModel::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
    }

    /// Routes `rows` through `node` and checks every accepted split lowers impurity.
    fn check_gini(node: &TreeNode, rows: &[&FeatureVector]) {
        let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } = node
        else {
            return;
        };
        let gini = |rs: &[&FeatureVector]| {
            let n = rs.len() as f64;
            let mut c = [0.0; CLASSES];
            for r in rs {
                c[r.label.index()] += 1.0;
            }
            1.0 - c.iter().map(|x| (x / n) * (x / n)).sum::<f64>()
        };
        let (l, r): (Vec<&FeatureVector>, Vec<&FeatureVector>) =
            rows.iter().partition(|r| r.values[*feature] <= *threshold);
        assert!(!l.is_empty() && !r.is_empty());
        let n = rows.len() as f64;
        let child = (l.len() as f64 * gini(&l) + r.len() as f64 * gini(&r)) / n;
        assert!(child < gini(rows) + 1e-12);
        check_gini(left, &l);
        check_gini(right, &r);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn probabilities_are_distributions(seed in 0u64..500, spread in 0.2f64..3.0) {
            let train = blobs(8, spread, seed);
            let model = fit_forest(&train, &ForestParams { n_trees: 9, seed, ..ForestParams::default() }).unwrap();
            for probe in blobs(3, spread * 2.0, seed + 1) {
                let p = model.predict_proba(&probe.values).unwrap();
                prop_assert!(check_proba(&p).is_ok());
            }
        }

        #[test]
        fn argmax_matches_majority_vote_with_pure_leaves(seed in 0u64..500) {
            // Continuous features have no duplicate rows, so unlimited trees end in pure leaves.
            let train = blobs(10, 1.5, seed);
            let model = fit_forest(&train, &ForestParams { n_trees: 11, seed, ..ForestParams::default() }).unwrap();
            for probe in blobs(4, 2.5, seed + 7) {
                let p = model.predict_proba(&probe.values).unwrap();
                let mut sorted = p;
                sorted.sort_by(|a, b| b.total_cmp(a));
                if sorted[0] > sorted[1] {
                    prop_assert_eq!(predict_label(&p).unwrap(), model.predict_vote(&probe.values).unwrap());
                }
            }
        }

        #[test]
        fn accepted_splits_never_raise_gini(seed in 0u64..500, leaf in 1usize..4) {
            let train = blobs(12, 2.0, seed);
            let params = ForestParams { min_samples_leaf: leaf, bootstrap: false, ..ForestParams::default() };
            let tree = DecisionTree::fit(&train, &params, seed).unwrap();
            let rows: Vec<&FeatureVector> = train.iter().collect();
            check_gini(&tree.root, &rows);
        }
    }
}
