//! ML-KNN: per-label Bayesian posteriors over neighbor label counts.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlknnParams {
    pub k_neighbors: usize,
    pub smoothing: f64,
}

impl Default for MlknnParams {
    fn default() -> Self {
        MlknnParams {
            k_neighbors: 10,
            smoothing: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MlknnModel {
    pub params: MlknnParams,
    /// `P(H_j = 1)` per label; `P(H_j = 0)` is the complement.
    pub priors: Vec<f64>,
    /// `conditionals[j][δ] = (P(E_δ | H_j = 1), P(E_δ | H_j = 0))`.
    pub conditionals: Vec<Vec<(f64, f64)>>,
    /// Raw histograms behind the conditionals: `(with label, without)`.
    pub counts: Vec<Vec<(usize, usize)>>,
    train_features: DMatrix<f64>,
    train_labels: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlknnPrediction {
    /// Posterior `P(H_j = 1 | E)`.
    pub scores: DMatrix<f64>,
    pub predictions: DMatrix<f64>,
}

/// Indices of the `k` nearest columns of `reference` to `query` by
/// Euclidean distance, ties by index. `skip` removes one reference column.
fn nearest(reference: &DMatrix<f64>, query: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut dist: Vec<(f64, usize)> = (0..reference.ncols())
        .filter(|&j| Some(j) != skip)
        .map(|j| {
            let d: f64 = reference
                .column(j)
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, j)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dist.truncate(k);
    dist.into_iter().map(|(_, j)| j).collect()
}

fn neighbor_counts(labels: &DMatrix<f64>, neighbors: &[usize]) -> Vec<usize> {
    (0..labels.ncols())
        .map(|j| neighbors.iter().filter(|&&i| labels[(i, j)] > 0.5).count())
        .collect()
}

impl MlknnModel {
    /// `features` holds one training instance per column; `labels` one per
    /// row.
    pub fn train(features: &DMatrix<f64>, labels: &DMatrix<f64>, params: MlknnParams) -> Result<Self> {
        let n = features.ncols();
        let k = params.k_neighbors;
        if labels.nrows() != n {
            return Err(Error::Argument(format!("{n} training columns but {} label rows", labels.nrows())));
        }
        if k == 0 || n <= k {
            return Err(Error::Argument(format!("ML-KNN needs 1 <= k < n_train, got k = {k}, n_train = {n}")));
        }
        if !(params.smoothing > 0.0) {
            return Err(Error::Argument(format!("smoothing must be positive, got {}", params.smoothing)));
        }
        let s = params.smoothing;
        let c = labels.ncols();
        let priors: Vec<f64> = (0..c)
            .map(|j| (s + labels.column(j).iter().filter(|&&v| v > 0.5).count() as f64) / (2.0 * s + n as f64))
            .collect();

        let mut counts = vec![vec![(0usize, 0usize); k + 1]; c];
        let mut query = vec![0.0; features.nrows()];
        for i in 0..n {
            query.iter_mut().zip(features.column(i).iter()).for_each(|(q, v)| *q = *v);
            let delta = neighbor_counts(labels, &nearest(features, &query, k, Some(i)));
            for j in 0..c {
                if labels[(i, j)] > 0.5 {
                    counts[j][delta[j]].0 += 1;
                } else {
                    counts[j][delta[j]].1 += 1;
                }
            }
        }
        let conditionals = counts
            .iter()
            .map(|hist| {
                let total1: usize = hist.iter().map(|h| h.0).sum();
                let total0: usize = hist.iter().map(|h| h.1).sum();
                let denom1 = s * (k + 1) as f64 + total1 as f64;
                let denom0 = s * (k + 1) as f64 + total0 as f64;
                hist.iter()
                    .map(|&(c1, c0)| ((s + c1 as f64) / denom1, (s + c0 as f64) / denom0))
                    .collect()
            })
            .collect();
        Ok(MlknnModel {
            params,
            priors,
            conditionals,
            counts,
            train_features: features.clone(),
            train_labels: labels.clone(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.train_features.nrows()
    }

    pub fn predict(&self, features: &DMatrix<f64>) -> Result<MlknnPrediction> {
        if features.nrows() != self.n_features() {
            return Err(Error::Argument(format!(
                "model expects {} features, got {}",
                self.n_features(),
                features.nrows()
            )));
        }
        let (m, c) = (features.ncols(), self.priors.len());
        let mut scores = DMatrix::zeros(m, c);
        let mut predictions = DMatrix::zeros(m, c);
        let mut query = vec![0.0; features.nrows()];
        for t in 0..m {
            query.iter_mut().zip(features.column(t).iter()).for_each(|(q, v)| *q = *v);
            let neighbors = nearest(&self.train_features, &query, self.params.k_neighbors, None);
            let delta = neighbor_counts(&self.train_labels, &neighbors);
            for j in 0..c {
                let (e1, e0) = self.conditionals[j][delta[j]];
                let p1 = self.priors[j] * e1;
                let p0 = (1.0 - self.priors[j]) * e0;
                scores[(t, j)] = p1 / (p1 + p0);
                predictions[(t, j)] = if p1 > p0 { 1.0 } else { 0.0 };
            }
        }
        Ok(MlknnPrediction { scores, predictions })
    }
}
