//! SMOTE oversampling: every minority class is topped up to the majority
//! count with points interpolated between a member and one of its nearest
//! same-class neighbours.

use std::collections::BTreeMap;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::InteractionClass;
use crate::error::{PhriError, Result};
use crate::features::FeatureVector;
use crate::par;
use crate::rng::stream;

pub const DEFAULT_SMOTE_K: usize = 5;

/// Where a synthetic row came from: `x + lambda * (neighbor - x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub seed: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedDataset {
    /// Originals in input order, then synthetics grouped by class.
    pub features: Vec<FeatureVector>,
    /// `Some` for synthetic rows; indices refer to the input slice.
    pub origins: Vec<Option<SyntheticOrigin>>,
    pub target_count: usize,
    pub warnings: Vec<String>,
}

impl BalancedDataset {
    pub fn is_synthetic(&self, row: usize) -> bool {
        self.origins[row].is_some()
    }

    pub fn synthetic_count(&self) -> usize {
        self.origins.iter().filter(|o| o.is_some()).count()
    }

    pub fn class_counts(&self) -> BTreeMap<InteractionClass, usize> {
        let mut out = BTreeMap::new();
        for f in &self.features {
            *out.entry(f.label).or_insert(0) += 1;
        }
        out
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Indices (into `members`) of the `k` nearest other members of `members[i]`,
/// closest first, distance ties broken by lower position.
fn nearest_members(data: &[FeatureVector], members: &[usize], i: usize, k: usize) -> Vec<usize> {
    let x = &data[members[i]].values;
    let mut d: Vec<(f64, usize)> = members
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, &m)| (squared_distance(x, &data[m].values), j))
        .collect();
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if d.len() > k {
        d.select_nth_unstable_by(k - 1, by_key);
        d.truncate(k);
    }
    d.sort_by(by_key);
    d.into_iter().map(|(_, j)| j).collect()
}

struct ClassPlan {
    class: InteractionClass,
    members: Vec<usize>,
    need: usize,
    k: usize,
}

fn oversample_class(data: &[FeatureVector], plan: &ClassPlan, rng_seed: u64) -> Vec<(FeatureVector, SyntheticOrigin)> {
    let mut rng = stream(rng_seed, &[plan.class.index() as u64]);
    let seeds: Vec<usize> = (0..plan.need)
        .map(|_| rng.random_range(0..plan.members.len()))
        .collect();
    let mut unique = seeds.clone();
    unique.sort_unstable();
    unique.dedup();
    let neighbor_lists = par::map(&unique, |&i| nearest_members(data, &plan.members, i, plan.k));
    let neighbors: BTreeMap<usize, Vec<usize>> = unique.into_iter().zip(neighbor_lists).collect();

    seeds
        .into_iter()
        .map(|s| {
            let list = &neighbors[&s];
            let nn = list[rng.random_range(0..list.len())];
            let lambda: f64 = rng.random();
            let x = &data[plan.members[s]];
            let y = &data[plan.members[nn]];
            let values = x
                .values
                .iter()
                .zip(&y.values)
                .map(|(a, b)| a + lambda * (b - a))
                .collect();
            (
                FeatureVector {
                    values,
                    layout: x.layout,
                    label: plan.class,
                },
                SyntheticOrigin {
                    seed: plan.members[s],
                    neighbor: plan.members[nn],
                    lambda,
                },
            )
        })
        .collect()
}

/// Balances `data` so every class present reaches the majority count.
///
/// Classes absent from `data` stay absent. A present class needs at least
/// two members; `k` is clamped to `class size - 1` with a warning.
pub fn smote_balance(data: &[FeatureVector], k: usize, rng_seed: u64) -> Result<BalancedDataset> {
    if k == 0 {
        return Err(PhriError::InvalidConfig("SMOTE needs k >= 1".into()));
    }
    let mut by_class: BTreeMap<InteractionClass, Vec<usize>> = BTreeMap::new();
    for (i, f) in data.iter().enumerate() {
        by_class.entry(f.label).or_default().push(i);
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);
    let mut warnings = Vec::new();
    let mut plans = Vec::new();
    for (&class, members) in &by_class {
        let need = target - members.len();
        if need == 0 {
            continue;
        }
        if members.len() < 2 {
            return Err(PhriError::ClassTooSmall {
                class,
                count: members.len(),
                needed: 2,
            });
        }
        let k_eff = k.min(members.len() - 1);
        if k_eff < k {
            let msg = format!("class {class}: k clamped from {k} to {k_eff}");
            warn!("{msg}");
            warnings.push(msg);
        }
        plans.push(ClassPlan {
            class,
            members: members.clone(),
            need,
            k: k_eff,
        });
    }

    let synthetic = par::map(&plans, |p| oversample_class(data, p, rng_seed));
    let mut features = data.to_vec();
    let mut origins = vec![None; data.len()];
    for (fv, origin) in synthetic.into_iter().flatten() {
        features.push(fv);
        origins.push(Some(origin));
    }
    Ok(BalancedDataset {
        features,
        origins,
        target_count: target,
        warnings,
    })
}
