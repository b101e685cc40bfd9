//! Projection update under the extended uncorrelated constraint `WᵀRW = I`,
//! with `R = XHXᵀ + λD + θXL_sXᵀ`.
//!
//! Each inner step maximizes `Tr(WᵀXHF)` on the constraint surface by the
//! substitution `A = R^{1/2}W`, `B = R^{-1/2}XHF`, which turns it into an
//! orthogonal procrustes problem solved by the compact SVD of `B`. The ℓ2,1
//! reweighting `D` is refreshed from the new `W` after every step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{center_columns, center_rows, sorted_symmetric_eigen, trace_inner};

/// Eigenvalues at or below this fraction of the largest are rejected.
const ILL_CONDITIONED_REL: f64 = 1e-12;
/// Singular values at or below this fraction of the largest count as rank loss.
const RANK_REL: f64 = 1e-10;

/// `R` together with its symmetric inverse square root.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMatrix {
    pub r: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl ConstraintMatrix {
    /// `R = scatter + λ·diag(d) + θ·graph_scatter`, where `scatter = XHXᵀ`
    /// and `graph_scatter = XL_sXᵀ`.
    pub fn assemble(
        scatter: &DMatrix<f64>,
        graph_scatter: Option<&DMatrix<f64>>,
        d: &DVector<f64>,
        lambda: f64,
        theta: f64,
    ) -> Result<Self> {
        let mut r = scatter.clone();
        for i in 0..d.len() {
            r[(i, i)] += lambda * d[i];
        }
        if let Some(gs) = graph_scatter {
            if theta != 0.0 {
                r += gs * theta;
            }
        }
        // exact symmetry so the eigensolver sees a symmetric input
        let r = (&r + r.transpose()) * 0.5;
        Self::from_matrix(r)
    }

    pub fn from_matrix(r: DMatrix<f64>) -> Result<Self> {
        let (values, vectors) = sorted_symmetric_eigen(&r);
        let n = values.len();
        let min_eigenvalue = values[0];
        let max_eigenvalue = values[n - 1];
        if !(max_eigenvalue > 0.0) || min_eigenvalue <= ILL_CONDITIONED_REL * max_eigenvalue {
            return Err(Error::IllConditioned {
                min_eigenvalue,
                max_eigenvalue,
            });
        }
        let scaled = DMatrix::from_fn(n, n, |i, j| vectors[(i, j)] / values[j].sqrt());
        let inv_sqrt = &scaled * vectors.transpose();
        let inv_sqrt = (&inv_sqrt + inv_sqrt.transpose()) * 0.5;
        Ok(ConstraintMatrix {
            r,
            inv_sqrt,
            min_eigenvalue,
            max_eigenvalue,
        })
    }

    /// `‖WᵀRW − I‖_F`.
    pub fn residual(&self, w: &DMatrix<f64>) -> f64 {
        let c = w.ncols();
        (w.transpose() * &self.r * w - DMatrix::identity(c, c)).norm()
    }
}

/// Literal assembly from `X`, `H`, `D`, `L_s`.
pub fn build_r(
    x: &DMatrix<f64>,
    h: &DMatrix<f64>,
    d: &DVector<f64>,
    l_s: &DMatrix<f64>,
    lambda: f64,
    theta: f64,
) -> Result<ConstraintMatrix> {
    let (dim, n) = x.shape();
    if h.shape() != (n, n) || l_s.shape() != (n, n) {
        return Err(Error::Config("H and L_s must be n×n".into()));
    }
    if d.len() != dim {
        return Err(Error::Config(format!("D has length {}, expected {dim}", d.len())));
    }
    let scatter = x * h * x.transpose();
    let graph = x * l_s * x.transpose();
    ConstraintMatrix::assemble(&scatter, Some(&graph), d, lambda, theta)
}

/// `D(i,i) = 1 / (2·sqrt(‖w_i‖² + ε))`.
pub fn update_d(w: &DMatrix<f64>, epsilon: f64) -> DVector<f64> {
    DVector::from_iterator(
        w.nrows(),
        w.row_iter().map(|r| 0.5 / (r.norm_squared() + epsilon).sqrt()),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct Procrustes {
    /// Matrix with orthonormal columns maximizing `Tr(AᵀB)`.
    pub a: DMatrix<f64>,
    pub rank_deficient: bool,
}

/// `argmax Tr(AᵀB)` subject to `AᵀA = I`, via `A = V_l V_rᵀ`.
///
/// When `B` loses rank the missing left singular directions are filled by
/// Gram–Schmidt over the standard basis, in index order.
pub fn procrustes(b: &DMatrix<f64>) -> Result<Procrustes> {
    let (d, c) = b.shape();
    if c > d {
        return Err(Error::Config(format!("procrustes needs rows >= cols, got {d}×{c}")));
    }
    let svd = nalgebra::SVD::new(b.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let full_rank = sigma_max > 0.0 && svd.singular_values.iter().all(|&s| s > RANK_REL * sigma_max);
    if full_rank {
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
        return Ok(Procrustes {
            a: u * v_t,
            rank_deficient: false,
        });
    }

    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let mut left: Vec<Option<DVector<f64>>> = vec![None; c];
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(c);
    for j in 0..c {
        if sigma_max > 0.0 && svd.singular_values[j] > RANK_REL * sigma_max {
            let col = u.column(j).clone_owned();
            basis.push(col.clone());
            left[j] = Some(col);
        }
    }
    let mut candidate = 0;
    for slot in left.iter_mut().filter(|s| s.is_none()) {
        loop {
            assert!(candidate < d, "ran out of basis vectors for completion");
            let mut e = DVector::zeros(d);
            e[candidate] = 1.0;
            candidate += 1;
            for q in &basis {
                let proj = q.dot(&e);
                e -= q * proj;
            }
            for q in &basis {
                let proj = q.dot(&e);
                e -= q * proj;
            }
            let norm = e.norm();
            if norm > 1e-8 {
                let e = e / norm;
                basis.push(e.clone());
                *slot = Some(e);
                break;
            }
        }
    }
    let mut a = DMatrix::zeros(d, c);
    for (j, u) in left.into_iter().enumerate() {
        let u = u.expect("filled above");
        a += u * v_t.row(j);
    }
    log::debug!("procrustes target lost rank; completed deterministically");
    Ok(Procrustes {
        a,
        rank_deficient: true,
    })
}

/// Quantities of `X` that stay fixed during a fit.
#[derive(Clone, Debug)]
pub struct DataScatter {
    /// `XH` (d×n).
    pub centered: DMatrix<f64>,
    /// `XHXᵀ` (d×d).
    pub scatter: DMatrix<f64>,
}

impl DataScatter {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let centered = center_rows(x);
        let scatter = &centered * centered.transpose();
        let scatter = (&scatter + scatter.transpose()) * 0.5;
        DataScatter { centered, scatter }
    }
}

/// `X L Xᵀ`, symmetrized.
pub fn graph_scatter(x: &DMatrix<f64>, l: &DMatrix<f64>) -> DMatrix<f64> {
    let g = x * l * x.transpose();
    (&g + g.transpose()) * 0.5
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WParams {
    pub lambda: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct WUpdate {
    pub w: DMatrix<f64>,
    /// Diagonal of `D` refreshed from the final `W`.
    pub d: DVector<f64>,
    /// `R` of the last inner step; `W` satisfies `WᵀRW = I` for it.
    pub constraint: ConstraintMatrix,
    /// `‖WᵀRW − I‖_F` after every inner step.
    pub residuals: Vec<f64>,
    /// `‖HXᵀW − HF‖² + λTr(WᵀDW) + θTr(WᵀXL_sXᵀW)` after every inner step,
    /// with the `D` that step was solved under.
    pub surrogate_values: Vec<f64>,
    pub rank_deficient_steps: usize,
}

impl WUpdate {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }
}

/// Inner reweighting loop: `D = I`, then repeat `R → B → C-SVD → W → D`.
///
/// Stops when the relative change of the surrogate value falls below
/// `params.tol` or after `params.max_iters` steps.
pub fn update_w(
    data: &DataScatter,
    graph_scatter: Option<&DMatrix<f64>>,
    f: &DMatrix<f64>,
    params: &WParams,
) -> Result<WUpdate> {
    let d = data.scatter.nrows();
    if f.nrows() != data.centered.ncols() {
        return Err(Error::Config(format!(
            "F has {} rows, data has {} instances",
            f.nrows(),
            data.centered.ncols()
        )));
    }
    let target = &data.centered * f; // XHF
    let centered_f = center_columns(f);
    let mut weights = DVector::from_element(d, 1.0);
    let mut residuals = Vec::new();
    let mut surrogate_values = Vec::new();
    let mut rank_deficient_steps = 0;
    let mut last: Option<(DMatrix<f64>, ConstraintMatrix)> = None;

    for _ in 0..params.max_iters.max(1) {
        let constraint =
            ConstraintMatrix::assemble(&data.scatter, graph_scatter, &weights, params.lambda, params.theta)?;
        let b = &constraint.inv_sqrt * &target;
        let solved = procrustes(&b)?;
        rank_deficient_steps += usize::from(solved.rank_deficient);
        let w = &constraint.inv_sqrt * &solved.a;
        residuals.push(constraint.residual(&w));

        let fit = data.centered.transpose() * &w - &centered_f;
        let mut value = fit.norm_squared();
        value += params.lambda * weighted_row_energy(&w, &weights);
        if let Some(gs) = graph_scatter {
            if params.theta != 0.0 {
                value += params.theta * trace_inner(&w, &(gs * &w));
            }
        }
        let converged = surrogate_values
            .last()
            .is_some_and(|&prev: &f64| (prev - value).abs() <= params.tol * prev.abs().max(f64::MIN_POSITIVE));
        surrogate_values.push(value);

        weights = update_d(&w, params.epsilon);
        last = Some((w, constraint));
        if converged {
            break;
        }
    }
    let (w, constraint) = last.expect("at least one inner step");
    Ok(WUpdate {
        w,
        d: weights,
        constraint,
        residuals,
        surrogate_values,
        rank_deficient_steps,
    })
}

/// `Tr(Wᵀ diag(d) W)`.
pub fn weighted_row_energy(w: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    w.row_iter().zip(d.iter()).map(|(r, di)| di * r.norm_squared()).sum()
}
