//! ReliefF feature weighting (Kononenko's multi-class variant).
//!
//! Features are min-max scaled per column, distances are Manhattan over the
//! scaled features. For each sampled instance the k nearest hits and the k
//! nearest misses of every other class update the weights by
//! `-diff(hit)/(m k)` and `+prior * diff(miss)/(m k)`, where the prior of a
//! miss class is `n_class / (n - n_own)`. With two classes the prior is 1.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureDescriptor, FeatureError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_top: usize,
    pub relieff_neighbors: usize,
    /// Number of sampled instances; `None` uses every instance.
    pub relieff_iterations: Option<usize>,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { k_top: 50, relieff_neighbors: 10, relieff_iterations: None, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub descriptor: FeatureDescriptor,
    /// Column index in the matrix the ranking was computed on.
    pub column: usize,
    pub score: f64,
}

/// Features sorted by descending score, ties in column order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedFeatures {
    pub entries: Vec<RankedFeature>,
}

impl RankedFeatures {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Column indices of the top `k`.
    pub fn top_columns(&self, k: usize) -> Result<Vec<usize>, FeatureError> {
        if k > self.len() {
            return Err(FeatureError::KTooLarge { k, available: self.len() });
        }
        Ok(self.entries[..k].iter().map(|e| e.column).collect())
    }
}

/// Raw ReliefF weights, one per column.
pub fn relieff_scores<R: AsRef<[f64]>>(
    x: &[R],
    labels: &[usize],
    neighbors: usize,
    iterations: Option<usize>,
    seed: u64,
) -> Result<Vec<f64>, FeatureError> {
    let n = x.len();
    if n == 0 {
        return Err(FeatureError::EmptyMatrix);
    }
    if labels.len() != n {
        return Err(FeatureError::LabelMismatch { labels: labels.len(), rows: n });
    }
    let dim = x[0].as_ref().len();
    if let Some(bad) = x.iter().find(|r| r.as_ref().len() != dim) {
        return Err(FeatureError::DimensionMismatch { expected: dim, got: bad.as_ref().len() });
    }
    let k = neighbors.max(1);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut class_sizes = vec![0usize; n_classes];
    for &c in labels {
        class_sizes[c] += 1;
    }
    let present: Vec<usize> = (0..n_classes).filter(|&c| class_sizes[c] > 0).collect();
    for &c in &present {
        if class_sizes[c] < k + 1 {
            return Err(FeatureError::DegenerateClass { class: c, members: class_sizes[c], k });
        }
    }
    if present.len() < 2 {
        return Err(FeatureError::DegenerateClass { class: present.first().copied().unwrap_or(0), members: n, k });
    }

    // Min-max scaled copy; constant columns scale to 0.
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for r in x {
        for (j, &v) in r.as_ref().iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let scaled: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            r.as_ref()
                .iter()
                .enumerate()
                .map(|(j, &v)| if hi[j] > lo[j] { (v - lo[j]) / (hi[j] - lo[j]) } else { 0.0 })
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let m = iterations.unwrap_or(n).clamp(1, n);
    order.truncate(m);

    let norm = (m * k) as f64;
    let mut weights = vec![0.0; dim];
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &r in &order {
        let own = labels[r];
        let row = &scaled[r];
        dist.clear();
        for (i, other) in scaled.iter().enumerate() {
            if i != r {
                let d: f64 = row.iter().zip(other).map(|(a, b)| (a - b).abs()).sum();
                dist.push((d, i));
            }
        }
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

        for &class in &present {
            let prior = if class == own {
                -1.0
            } else {
                class_sizes[class] as f64 / (n - class_sizes[own]) as f64
            };
            for &(_, i) in dist.iter().filter(|(_, i)| labels[*i] == class).take(k) {
                for ((w, a), b) in weights.iter_mut().zip(row).zip(&scaled[i]) {
                    *w += prior * (a - b).abs() / norm;
                }
            }
        }
    }
    Ok(weights)
}

/// Ranks the columns of `x` (described by `columns`) by ReliefF weight.
pub fn relieff_rank<R: AsRef<[f64]>>(
    x: &[R],
    labels: &[usize],
    columns: &[FeatureDescriptor],
    cfg: &SelectionConfig,
) -> Result<RankedFeatures, FeatureError> {
    let scores = relieff_scores(x, labels, cfg.relieff_neighbors, cfg.relieff_iterations, cfg.seed)?;
    if scores.len() != columns.len() {
        return Err(FeatureError::DimensionMismatch { expected: columns.len(), got: scores.len() });
    }
    let mut entries: Vec<RankedFeature> = scores
        .into_iter()
        .enumerate()
        .map(|(column, score)| RankedFeature { descriptor: columns[column], column, score })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.column.cmp(&b.column)));
    Ok(RankedFeatures { entries })
}

/// The first `k` descriptors of a ranking.
pub fn select_top(ranked: &RankedFeatures, k: usize) -> Result<Vec<FeatureDescriptor>, FeatureError> {
    if k > ranked.len() {
        return Err(FeatureError::KTooLarge { k, available: ranked.len() });
    }
    Ok(ranked.entries[..k].iter().map(|e| e.descriptor).collect())
}
