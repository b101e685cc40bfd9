//! Adaptive neighbor graphs over instances (S) and labels (P).
//!
//! Each row of a similarity matrix solves
//! `min_s Σ_j m_j s_j + α ‖s‖²` over the probability simplex, with `α`
//! chosen per row so that exactly the `k` cheapest entries can be nonzero.
//! The resulting closed form is
//! `s_j = (m_(k+1) − m_j) / (k·m_(k+1) − Σ_{h≤k} m_(h))` on the `k` nearest
//! entries and zero elsewhere, where `m_(h)` is the h-th smallest cost.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::half_sq_dist_columns;

/// Denominators at or below this fraction of `k·m_(k+1)` are treated as ties.
const DEGENERATE_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Instance,
    Label,
}

/// Symmetric, nonnegative pairwise cost matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseCost {
    pub values: DMatrix<f64>,
    pub kind: CostKind,
}

/// Per-row regularizers picked by the closed-form graph updates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RowRegularizer {
    pub alpha_rows: DVector<f64>,
    pub beta_rows: DVector<f64>,
}

impl RowRegularizer {
    pub fn mean_alpha(&self) -> f64 {
        mean(&self.alpha_rows)
    }

    pub fn mean_beta(&self) -> f64 {
        mean(&self.beta_rows)
    }
}

fn mean(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.mean()
    }
}

/// `m_ij = ½‖Wᵀx_i − Wᵀx_j‖² + ½‖f_i − f_j‖²`.
pub fn instance_cost(x: &DMatrix<f64>, w: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<PairwiseCost> {
    let (d, n) = x.shape();
    if w.nrows() != d {
        return Err(Error::Config(format!("W has {} rows, X has {d} features", w.nrows())));
    }
    if f.nrows() != n {
        return Err(Error::Config(format!("F has {} rows, X has {n} instances", f.nrows())));
    }
    if f.ncols() != w.ncols() {
        return Err(Error::Config(format!(
            "F has {} columns, W has {}",
            f.ncols(),
            w.ncols()
        )));
    }
    let projected = w.transpose() * x;
    let mut values = half_sq_dist_columns(&projected);
    values += half_sq_dist_columns(&f.transpose());
    Ok(PairwiseCost {
        values,
        kind: CostKind::Instance,
    })
}

/// `g_ij = ½‖f_·i − f_·j‖²` over label columns of `F`.
pub fn label_cost(f: &DMatrix<f64>) -> PairwiseCost {
    PairwiseCost {
        values: half_sq_dist_columns(f),
        kind: CostKind::Label,
    }
}

/// Solution of one simplex row.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexRow {
    pub weights: Vec<f64>,
    /// The row's regularizer `(k·m_(k+1) − Σ_{h≤k} m_(h)) / 2`.
    pub reg: f64,
    /// The k+1 smallest costs were all equal; weights fell back to uniform.
    pub degenerate: bool,
}

/// Closed-form k-sparse simplex row.
///
/// Entries equal to `+∞` are excluded (they receive weight zero and never
/// count as neighbors); this is how the self entry of a row is handled.
/// Ties in cost are ranked by index.
pub fn sparse_simplex_row(costs: &[f64], k: usize) -> Result<SimplexRow> {
    if let Some(bad) = costs.iter().find(|c| c.is_nan() || **c < 0.0 || **c == f64::NEG_INFINITY) {
        return Err(Error::Argument(format!("costs must be nonnegative, got {bad}")));
    }
    let mut order: Vec<usize> = (0..costs.len()).filter(|&j| costs[j].is_finite()).collect();
    if k == 0 || k > order.len() {
        return Err(Error::Argument(format!(
            "neighbor count {k} needs at least {k} candidates, got {}",
            order.len()
        )));
    }
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));

    // With exactly k candidates there is no (k+1)-th cost to anchor the
    // regularizer, so every candidate is a neighbor with equal weight.
    let boundary = order.get(k).map_or(f64::NAN, |&j| costs[j]);
    let nearest_sum: f64 = order[..k].iter().map(|&j| costs[j]).sum();
    let denom = k as f64 * boundary - nearest_sum;

    let mut weights = vec![0.0; costs.len()];
    if boundary.is_nan() || denom <= DEGENERATE_REL * k as f64 * boundary || denom <= 0.0 {
        let uniform = 1.0 / k as f64;
        for &j in &order[..k] {
            weights[j] = uniform;
        }
        return Ok(SimplexRow {
            weights,
            reg: 0.0,
            degenerate: true,
        });
    }
    for &j in &order[..k] {
        weights[j] = (boundary - costs[j]) / denom;
    }
    Ok(SimplexRow {
        weights,
        reg: denom / 2.0,
        degenerate: false,
    })
}

/// Result of updating a whole similarity matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphUpdate {
    pub weights: DMatrix<f64>,
    /// Per-row α (instance graph) or β (label graph).
    pub regularizers: DVector<f64>,
    pub degenerate_rows: usize,
}

fn update_rows(cost: &DMatrix<f64>, k: usize) -> Result<GraphUpdate> {
    let m = cost.nrows();
    let mut weights = DMatrix::zeros(m, m);
    let mut regularizers = DVector::zeros(m);
    let mut degenerate_rows = 0;
    let mut row = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            row[j] = if i == j { f64::INFINITY } else { cost[(i, j)] };
        }
        let solved = sparse_simplex_row(&row, k)?;
        for (j, w) in solved.weights.iter().enumerate() {
            weights[(i, j)] = *w;
        }
        regularizers[i] = solved.reg;
        degenerate_rows += usize::from(solved.degenerate);
    }
    if degenerate_rows > 0 {
        log::debug!("{degenerate_rows} of {m} graph rows fell back to uniform weights");
    }
    Ok(GraphUpdate {
        weights,
        regularizers,
        degenerate_rows,
    })
}

/// Instance graph: each row keeps its `k_s` nearest instances.
pub fn update_s(cost: &PairwiseCost, k_s: usize) -> Result<GraphUpdate> {
    let n = cost.values.nrows();
    if k_s + 2 > n {
        return Err(Error::Config(format!("k_s = {k_s} exceeds n - 2 = {}", n as isize - 2)));
    }
    update_rows(&cost.values, k_s)
}

/// Label graph: each row keeps its `k_p` nearest labels.
pub fn update_p(cost: &PairwiseCost, k_p: usize) -> Result<GraphUpdate> {
    let c = cost.values.nrows();
    if k_p + 1 > c {
        return Err(Error::Config(format!("k_p = {k_p} exceeds c - 1 = {}", c as isize - 1)));
    }
    update_rows(&cost.values, k_p)
}

/// `Σ_i (Σ_j m_ij s_ij + reg_i ‖s_i‖²)`.
pub fn graph_objective(cost: &DMatrix<f64>, weights: &DMatrix<f64>, regularizers: &DVector<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..weights.nrows() {
        let row = weights.row(i);
        total += cost.row(i).dot(&row) + regularizers[i] * row.norm_squared();
    }
    total
}
