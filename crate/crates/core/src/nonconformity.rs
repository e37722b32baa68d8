//! Nearest-neighbour nonconformity scores.
//!
//! The score of example `i` is the distance to its nearest neighbour with the
//! same label divided by the distance to its nearest neighbour with a different
//! label, with degenerate ratios resolved by [`ext_ratio`].

use crate::error::{Error, Result};
use crate::types::{ext_ratio, sq_dist, ExtReal, Label, LabeledExample};

/// Incrementally maintained 1-NN scores over a growing multiset of examples.
///
/// Only two minima per example are kept. Nearest-neighbour distances over a
/// growing set can only shrink, so a new example touches each old entry once.
#[derive(Debug, Clone, Default)]
pub struct NonconformityState {
    dim: Option<usize>,
    features: Vec<f64>,
    labels: Vec<Label>,
    // squared distances; sqrt is taken lazily when scoring
    same_sq: Vec<f64>,
    diff_sq: Vec<f64>,
    distance_evals: u64,
}

impl NonconformityState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Total number of pairwise distance evaluations performed so far.
    pub fn distance_evals(&self) -> u64 {
        self.distance_evals
    }

    /// Adds `z` to the multiset, updating every stored minimum against it.
    /// Returns the index of the new example.
    pub fn push(&mut self, z: &LabeledExample) -> Result<usize> {
        let dim = *self.dim.get_or_insert(z.dim());
        if z.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: z.dim(),
            });
        }
        let x = z.features();
        let y = z.label();
        let mut own_same = f64::INFINITY;
        let mut own_diff = f64::INFINITY;
        for (j, old) in self.features.chunks_exact(dim).enumerate() {
            let d = sq_dist(old, x);
            if self.labels[j] == y {
                own_same = own_same.min(d);
                self.same_sq[j] = self.same_sq[j].min(d);
            } else {
                own_diff = own_diff.min(d);
                self.diff_sq[j] = self.diff_sq[j].min(d);
            }
        }
        self.distance_evals += self.labels.len() as u64;
        self.features.extend_from_slice(x);
        self.labels.push(y);
        self.same_sq.push(own_same);
        self.diff_sq.push(own_diff);
        Ok(self.labels.len() - 1)
    }

    /// Score of example `i` with respect to the current multiset.
    pub fn score(&self, i: usize) -> ExtReal {
        ratio_from_sq(self.same_sq[i], self.diff_sq[i])
    }

    pub fn scores(&self) -> Vec<ExtReal> {
        (0..self.len()).map(|i| self.score(i)).collect()
    }

    /// Nearest same-label distance of example `i` (`INF` if none).
    pub fn nearest_same(&self, i: usize) -> ExtReal {
        to_ext(self.same_sq[i].sqrt())
    }

    /// Nearest different-label distance of example `i` (`INF` if none).
    pub fn nearest_diff(&self, i: usize) -> ExtReal {
        to_ext(self.diff_sq[i].sqrt())
    }
}

fn to_ext(v: f64) -> ExtReal {
    ExtReal::new(v).expect("distances are nonnegative")
}

fn ratio_from_sq(same_sq: f64, diff_sq: f64) -> ExtReal {
    ext_ratio(to_ext(same_sq.sqrt()), to_ext(diff_sq.sqrt()))
}

/// Reference O(n²·d) computation of all scores, straight from the definition.
pub fn batch_scores(examples: &[LabeledExample]) -> Result<Vec<ExtReal>> {
    if examples.is_empty() {
        return Err(Error::invalid("batch_scores needs at least one example"));
    }
    crate::types::common_dim(examples)?;
    let mut out = Vec::with_capacity(examples.len());
    for (i, zi) in examples.iter().enumerate() {
        let mut same = f64::INFINITY;
        let mut diff = f64::INFINITY;
        for (j, zj) in examples.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = crate::types::euclidean_distance(zi.features(), zj.features())?;
            if zi.label() == zj.label() {
                same = same.min(d);
            } else {
                diff = diff.min(d);
            }
        }
        out.push(ext_ratio(to_ext(same), to_ext(diff)));
    }
    Ok(out)
}
