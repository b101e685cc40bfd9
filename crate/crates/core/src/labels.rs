//! Predicted-label update: the Sylvester equation `QF + μFL_p = C` with
//! `Q = θL_s + H + U` and `C = HXᵀW + UY`.
//!
//! `L_p` is symmetric, so `L_p = VΛVᵀ` decouples the equation into one
//! shifted system `(Q + μλ_j I) f̃_j = c̃_j` per label direction.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{center_columns, sorted_symmetric_eigen, trace_inner};

/// Cholesky pivots below this fraction of the largest diagonal entry are
/// treated as singular.
const SINGULAR_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SylvesterSystem {
    pub q: DMatrix<f64>,
    pub lp: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub mu: f64,
}

/// Builds `Q` and `C` from the current projection and graphs.
#[allow(clippy::too_many_arguments)]
pub fn assemble_system(
    x: &DMatrix<f64>,
    w: &DMatrix<f64>,
    y: &DMatrix<f64>,
    l_s: &DMatrix<f64>,
    l_p: &DMatrix<f64>,
    labeled_mask: &[bool],
    theta: f64,
    mu: f64,
) -> Result<SylvesterSystem> {
    let (d, n) = x.shape();
    let c = y.ncols();
    if w.shape() != (d, c) {
        return Err(Error::Config(format!("W is {:?}, expected ({d}, {c})", w.shape())));
    }
    if y.nrows() != n || labeled_mask.len() != n || l_s.shape() != (n, n) || l_p.shape() != (c, c) {
        return Err(Error::Config("inconsistent shapes in label system".into()));
    }
    let inv_n = 1.0 / n as f64;
    let mut q = l_s * theta;
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] -= inv_n;
        }
        q[(i, i)] += 1.0;
        if labeled_mask[i] {
            q[(i, i)] += 1.0;
        }
    }
    let q = (&q + q.transpose()) * 0.5;

    let mut rhs = center_columns(&(x.transpose() * w));
    for (i, &labeled) in labeled_mask.iter().enumerate() {
        if labeled {
            let row = y.row(i).clone_owned();
            let mut dst = rhs.row_mut(i);
            dst += row;
        }
    }
    Ok(SylvesterSystem {
        q,
        lp: l_p.clone(),
        c: rhs,
        mu,
    })
}

impl SylvesterSystem {
    /// `‖QF + μFL_p − C‖_F`.
    pub fn residual(&self, f: &DMatrix<f64>) -> f64 {
        (&self.q * f + f * &self.lp * self.mu - &self.c).norm()
    }

    /// `Tr(FᵀQF − 2FᵀC) + μTr(FL_pFᵀ)`.
    pub fn objective(&self, f: &DMatrix<f64>) -> f64 {
        trace_inner(f, &(&self.q * f)) - 2.0 * trace_inner(f, &self.c)
            + self.mu * trace_inner(f, &(f * &self.lp))
    }

    /// Gradient of [`Self::objective`] up to a factor of two.
    pub fn half_gradient(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * f + f * &self.lp * self.mu - &self.c
    }
}

/// Solves `QF + μFL_p = C` exactly.
pub fn solve_f(sys: &SylvesterSystem) -> Result<DMatrix<f64>> {
    let n = sys.q.nrows();
    let c = sys.lp.nrows();
    if sys.q.ncols() != n || sys.lp.ncols() != c || sys.c.shape() != (n, c) {
        return Err(Error::Config("inconsistent shapes in Sylvester system".into()));
    }
    let lp = (&sys.lp + sys.lp.transpose()) * 0.5;
    let (shifts, v) = sorted_symmetric_eigen(&lp);
    let rotated = &sys.c * &v;
    let mut solved = DMatrix::zeros(n, c);

    let mut cached: Option<(f64, Cholesky<f64, nalgebra::Dyn>)> = None;
    for j in 0..c {
        let shift = sys.mu * shifts[j];
        let reuse = matches!(&cached, Some((s, _)) if *s == shift);
        if !reuse {
            let mut m = sys.q.clone();
            for i in 0..n {
                m[(i, i)] += shift;
            }
            cached = Some((shift, factor(m, shift)?));
        }
        let (_, chol) = cached.as_ref().expect("factored above");
        let col = chol.solve(&rotated.column(j).clone_owned());
        solved.set_column(j, &col);
    }
    Ok(solved * v.transpose())
}

fn factor(m: DMatrix<f64>, shift: f64) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let scale = m.diagonal().amax();
    let chol = Cholesky::new(m).ok_or_else(|| {
        Error::Singular(format!("Q + {shift:e}·I is not positive definite"))
    })?;
    let l = chol.l_dirty();
    let min_pivot = (0..l.nrows()).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot * min_pivot > SINGULAR_REL * scale) {
        return Err(Error::Singular(format!(
            "Q + {shift:e}·I has pivot {:e} against scale {scale:e}",
            min_pivot * min_pivot
        )));
    }
    Ok(chol)
}
