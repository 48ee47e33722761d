//! Transfer content selection over score vectors. Indices refer to positions
//! in the source buffer, oldest first.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentSelection {
    /// Uniform sample among tuples whose Δ-conf is above the median.
    Rdc,
    /// Highest Δ-conf first.
    Hdc,
    /// Equal blend of normalised Δ-conf and normalised |TD error|.
    Lec,
}

impl ContentSelection {
    pub fn short_name(self) -> &'static str {
        match self {
            ContentSelection::Rdc => "rdc",
            ContentSelection::Hdc => "hdc",
            ContentSelection::Lec => "lec",
        }
    }
}

/// Target's current estimate minus the source's stored label, per tuple.
pub fn delta_conf(target_estimates: &[f64], source_labels: &[f64]) -> Vec<f64> {
    target_estimates.iter().zip(source_labels).map(|(t, s)| t - s).collect()
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Positions with Δ-conf strictly above the median.
pub fn rdc_eligible(delta: &[f64]) -> Vec<usize> {
    if delta.is_empty() {
        return Vec::new();
    }
    let m = median(delta);
    (0..delta.len()).filter(|&i| delta[i] > m).collect()
}

/// `min(budget, |eligible|)` distinct eligible positions, uniformly.
pub fn rdc_select<R: Rng + ?Sized>(delta: &[f64], budget: usize, rng: &mut R) -> Vec<usize> {
    let eligible = rdc_eligible(delta);
    let n = budget.min(eligible.len());
    rand::seq::index::sample(rng, eligible.len(), n).into_iter().map(|k| eligible[k]).collect()
}

/// The `budget` highest scores, descending; ties keep buffer order.
pub fn top_by_score(scores: &[f64], budget: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // Stable, so equal scores stay oldest first.
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx.truncate(budget);
    idx
}

pub fn hdc_select(delta: &[f64], budget: usize) -> Vec<usize> {
    top_by_score(delta, budget)
}

/// Min-max scaling to `[0, 1]`; a constant vector maps to zeros.
pub fn minmax_normalize(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

pub fn lec_scores(delta: &[f64], abs_td: &[f64]) -> Vec<f64> {
    let d = minmax_normalize(delta);
    let s = minmax_normalize(abs_td);
    d.iter().zip(&s).map(|(a, b)| 0.5 * a + 0.5 * b).collect()
}

pub fn lec_select(delta: &[f64], abs_td: &[f64], budget: usize) -> Vec<usize> {
    top_by_score(&lec_scores(delta, abs_td), budget)
}
