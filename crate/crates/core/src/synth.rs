//! Planted-structure multi-label data: a block of informative features drives
//! every label through a random linear map and a per-label threshold; the
//! remaining features are independent noise.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_instances: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub n_labels: usize,
    /// Standard deviation of the Gaussian noise added before thresholding.
    pub noise: f64,
    /// Labels are positive above this quantile of their score column.
    pub quantile: f64,
    /// When positive, the informative features are noisy linear views of
    /// this many latent factors instead of independent draws.
    pub latent_dim: usize,
    /// Standard deviation of the per-feature noise around the latent view.
    pub latent_noise: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_instances: 300,
            n_features: 50,
            n_informative: 10,
            n_labels: 5,
            noise: 0.1,
            quantile: 0.7,
            latent_dim: 0,
            latent_noise: 0.25,
            seed: 1,
        }
    }
}

/// Ground truth written next to a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub params: SynthParams,
    /// Sorted indices of the informative features.
    pub informative: Vec<usize>,
    /// `n_informative × n_labels`, row-major.
    pub mixing: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
}

impl SynthTruth {
    /// Noise-free label scores `X_infᵀA − t`; with zero noise these rank
    /// every instance's labels perfectly.
    pub fn linear_probe(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        let a = DMatrix::from_fn(self.informative.len(), self.thresholds.len(), |i, j| self.mixing[i][j]);
        let mut z = features.select_rows(&self.informative).transpose() * a;
        for (j, t) in self.thresholds.iter().enumerate() {
            z.column_mut(j).add_scalar_mut(-t);
        }
        z
    }
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub truth: SynthTruth,
}

pub fn generate(params: &SynthParams) -> Result<Synthetic> {
    let SynthParams {
        n_instances: n,
        n_features: d,
        n_informative: m,
        n_labels: c,
        noise,
        quantile,
        latent_dim,
        latent_noise,
        seed,
    } = *params;
    if m == 0 || m > d {
        return Err(Error::Argument(format!("informative count {m} outside [1, {d}]")));
    }
    if c == 0 || n < 2 {
        return Err(Error::Argument(format!("need at least one label and two instances, got c = {c}, n = {n}")));
    }
    if !(noise >= 0.0) || !(latent_noise >= 0.0) || !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Argument(format!("noise {noise} must be >= 0 and quantile {quantile} in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut x = DMatrix::from_fn(d, n, |_, _| normal());
    let a = DMatrix::from_fn(m, c, |_, _| normal());
    let noise_m = DMatrix::from_fn(n, c, |_, _| normal());

    let mut informative = sample(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15), d, m).into_vec();
    informative.sort_unstable();
    if latent_dim > 0 {
        let scale = (latent_dim as f64).sqrt().recip();
        let factors = DMatrix::from_fn(latent_dim, n, |_, _| normal());
        let loading = DMatrix::from_fn(m, latent_dim, |_, _| normal() * scale);
        let view = loading * factors;
        for (r, &f) in informative.iter().enumerate() {
            let own = x.row(f) * latent_noise;
            x.set_row(f, &(view.row(r) + own));
        }
    }

    let clean = x.select_rows(&informative).transpose() * &a;
    let z = &clean + noise_m * noise;
    let cut = ((quantile * n as f64).ceil() as usize).clamp(1, n) - 1;
    let mut thresholds = Vec::with_capacity(c);
    let mut labels = DMatrix::zeros(n, c);
    for j in 0..c {
        let mut col: Vec<f64> = z.column(j).iter().copied().collect();
        col.sort_by(f64::total_cmp);
        let t = col[cut];
        thresholds.push(t);
        for i in 0..n {
            labels[(i, j)] = if z[(i, j)] > t { 1.0 } else { 0.0 };
        }
    }
    let truth = SynthTruth {
        params: params.clone(),
        informative,
        mixing: (0..m).map(|i| a.row(i).iter().copied().collect()).collect(),
        thresholds,
    };
    Ok(Synthetic {
        dataset: Dataset::fully_labeled(x, labels)?,
        truth,
    })
}
