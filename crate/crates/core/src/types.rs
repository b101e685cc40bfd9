//! Domain types shared by every solver block.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RowRegularizer;
use crate::linalg::laplacian;

/// Tolerances used by invariant checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bound on `‖WᵀRW − I‖_F`.
    pub constraint: f64,
    /// Bound on the deviation of a similarity row sum from one.
    pub simplex: f64,
    /// Relative tolerance for algebraic identities.
    pub identity: f64,
    /// Relative slack allowed for an increase of the objective trace.
    pub trace_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            constraint: 1e-6,
            simplex: 1e-10,
            identity: 1e-8,
            trace_slack: 1e-9,
        }
    }
}

/// Feature matrix (d×n, one column per instance), binary labels (n×c) and
/// the mask of instances whose labels are visible to the learner.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: DMatrix<f64>,
    labeled_mask: Vec<bool>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: DMatrix<f64>, labeled_mask: Vec<bool>) -> Result<Self> {
        let (d, n) = features.shape();
        if d < 1 {
            return Err(Error::Config("dataset needs at least one feature".into()));
        }
        if n < 2 {
            return Err(Error::Config(format!("dataset needs at least two instances, got {n}")));
        }
        if labels.nrows() != n {
            return Err(Error::Config(format!(
                "label matrix has {} rows but there are {n} instances",
                labels.nrows()
            )));
        }
        if labels.ncols() < 1 {
            return Err(Error::Config("dataset needs at least one label".into()));
        }
        if labeled_mask.len() != n {
            return Err(Error::Config(format!(
                "labeled mask has length {} but there are {n} instances",
                labeled_mask.len()
            )));
        }
        if let Some((i, v)) = labels.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
            return Err(Error::Config(format!(
                "label entry {v} at (row {}, col {}) is not binary",
                i % n,
                i / n
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("feature matrix contains non-finite values".into()));
        }
        Ok(Dataset {
            features,
            labels,
            labeled_mask,
        })
    }

    /// Every instance labeled.
    pub fn fully_labeled(features: DMatrix<f64>, labels: DMatrix<f64>) -> Result<Self> {
        let n = features.ncols();
        Self::new(features, labels, vec![true; n])
    }

    pub fn with_mask(&self, labeled_mask: Vec<bool>) -> Result<Self> {
        Self::new(self.features.clone(), self.labels.clone(), labeled_mask)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Ground-truth labels, including rows of unlabeled instances.
    pub fn labels(&self) -> &DMatrix<f64> {
        &self.labels
    }

    pub fn labeled_mask(&self) -> &[bool] {
        &self.labeled_mask
    }

    pub fn n_features(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_instances(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.ncols()
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled_mask.iter().filter(|&&m| m).count()
    }

    /// Label matrix seen by the learner: unlabeled rows are zero.
    pub fn working_labels(&self) -> DMatrix<f64> {
        let mut y = self.labels.clone();
        for (i, &labeled) in self.labeled_mask.iter().enumerate() {
            if !labeled {
                y.row_mut(i).fill(0.0);
            }
        }
        y
    }

    /// Requires at least one labeled and one unlabeled instance.
    pub fn check_semi_supervised(&self) -> Result<()> {
        let labeled = self.n_labeled();
        if labeled == 0 {
            return Err(Error::Config("no labeled instances; at least one is required".into()));
        }
        if labeled == self.n_instances() {
            return Err(Error::Config("no unlabeled instances; at least one is required".into()));
        }
        Ok(())
    }

    /// Mean number of positive labels per instance.
    pub fn label_cardinality(&self) -> f64 {
        self.labels.sum() / self.n_instances() as f64
    }

    pub fn label_density(&self) -> f64 {
        self.label_cardinality() / self.n_labels() as f64
    }

    /// Keep only the given feature rows, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<DMatrix<f64>> {
        let d = self.n_features();
        if let Some(&bad) = features.iter().find(|&&f| f >= d) {
            return Err(Error::Argument(format!("feature index {bad} out of range (d = {d})")));
        }
        Ok(self.features.select_rows(features))
    }
}

/// Trade-off weights, neighbor counts and iteration controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// ℓ2,1 weight; must be positive so `R` stays positive definite.
    pub lambda: f64,
    /// Instance-graph weight.
    pub theta: f64,
    /// Label-graph weight.
    pub mu: f64,
    pub k_s: usize,
    pub k_p: usize,
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub max_w_iters: usize,
    pub tol_rel_obj: f64,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            lambda: 1.0,
            theta: 1.0,
            mu: 1.0,
            k_s: 5,
            k_p: 3,
            epsilon: 1e-8,
            max_outer_iters: 50,
            max_w_iters: 20,
            tol_rel_obj: 1e-5,
            seed: 1,
        }
    }
}

impl Hyperparameters {
    /// Checks the ranges that depend on the problem size.
    pub fn validate(&self, n: usize, d: usize, c: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return bad(format!("theta must be nonnegative, got {}", self.theta));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return bad(format!("mu must be nonnegative, got {}", self.mu));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.tol_rel_obj > 0.0) {
            return bad(format!("tol_rel_obj must be positive, got {}", self.tol_rel_obj));
        }
        if self.k_s < 1 || self.k_s + 2 > n {
            return bad(format!("k_s = {} outside [1, n-2] with n = {n}", self.k_s));
        }
        if c < 2 {
            return bad("label graph needs at least two labels".into());
        }
        if self.k_p < 1 || self.k_p + 1 > c {
            return bad(format!("k_p = {} outside [1, c-1] with c = {c}", self.k_p));
        }
        if c > d {
            return bad(format!("more labels ({c}) than features ({d}): WᵀRW = I is infeasible"));
        }
        if self.max_outer_iters == 0 || self.max_w_iters == 0 {
            return bad("iteration caps must be at least one".into());
        }
        Ok(())
    }
}

/// Current iterates of the alternating solver.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    /// Projection, d×c.
    pub w: DMatrix<f64>,
    /// Bias, materialized from `w` and `f`.
    pub b: DVector<f64>,
    /// Predicted labels, n×c.
    pub f: DMatrix<f64>,
    /// Instance similarity, n×n, row-stochastic.
    pub s: DMatrix<f64>,
    /// Label similarity, c×c, row-stochastic.
    pub p: DMatrix<f64>,
    /// Diagonal of the ℓ2,1 reweighting matrix.
    pub d: DVector<f64>,
    pub regularizers: RowRegularizer,
    pub objective: f64,
}

/// Laplacians of the two similarity graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphPair {
    pub laplacian_s: DMatrix<f64>,
    pub laplacian_p: DMatrix<f64>,
}

impl GraphPair {
    pub fn from_graphs(s: &DMatrix<f64>, p: &DMatrix<f64>) -> Self {
        GraphPair {
            laplacian_s: laplacian(s),
            laplacian_p: laplacian(p),
        }
    }
}
