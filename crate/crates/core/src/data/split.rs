//! Labeled/unlabeled splits. The labeled fraction is the training set; the
//! remaining instances are both the test set and the unlabeled data.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of instances whose labels are visible, in (0, 1).
    pub labeled_ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Sorted.
    pub labeled: Vec<usize>,
    /// Sorted.
    pub unlabeled: Vec<usize>,
}

impl Split {
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.labeled.len() + self.unlabeled.len()];
        for &i in &self.labeled {
            mask[i] = true;
        }
        mask
    }

    /// The dataset with labels hidden on the unlabeled side.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if self.labeled.len() + self.unlabeled.len() != data.n_instances() {
            return Err(Error::Argument(format!(
                "split covers {} instances but the dataset has {}",
                self.labeled.len() + self.unlabeled.len(),
                data.n_instances()
            )));
        }
        data.with_mask(self.mask())
    }
}

/// Uniform sampling without replacement of `round(ratio · n)` instances.
pub fn make_split(n: usize, spec: SplitSpec) -> Result<Split> {
    if !(spec.labeled_ratio > 0.0 && spec.labeled_ratio < 1.0) {
        return Err(Error::Argument(format!("labeled ratio {} outside (0, 1)", spec.labeled_ratio)));
    }
    let count = (spec.labeled_ratio * n as f64).round() as usize;
    if count == 0 || count >= n {
        return Err(Error::Argument(format!(
            "labeled ratio {} on {n} instances leaves {count} labeled; need between 1 and {}",
            spec.labeled_ratio,
            n.saturating_sub(1)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut labeled = sample(&mut rng, n, count).into_vec();
    labeled.sort_unstable();
    let mut mask = vec![false; n];
    for &i in &labeled {
        mask[i] = true;
    }
    let unlabeled = (0..n).filter(|&i| !mask[i]).collect();
    Ok(Split { labeled, unlabeled })
}
