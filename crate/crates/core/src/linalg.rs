//! Dense matrix utilities shared by the solver blocks.

use nalgebra::{DMatrix, DVector};

/// `I - (1/n) 1 1ᵀ`.
pub fn centering_matrix(n: usize) -> DMatrix<f64> {
    let inv = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - inv } else { -inv })
}

/// Laplacian of the symmetrized graph: `diag(Ã 1) - Ã` with `Ã = (A + Aᵀ)/2`.
///
/// Row-stochastic similarity matrices are generally asymmetric; the quadratic
/// form `Tr(Fᵀ L F)` only sees the symmetric part, so this is the Laplacian
/// every trace term and linear solve uses.
pub fn laplacian(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "laplacian expects a square matrix");
    let m = a.nrows();
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        let mut degree = 0.0;
        for j in 0..m {
            if i != j {
                let w = 0.5 * (a[(i, j)] + a[(j, i)]);
                l[(i, j)] = -w;
                degree += w;
            }
        }
        l[(i, i)] = degree;
    }
    l
}

/// Sum of row-wise ℓ2 norms.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    row_norms(m).iter().sum()
}

pub fn row_norms(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.norm()))
}

/// Diagonal 0/1 matrix marking labeled instances.
pub fn label_indicator(mask: &[bool]) -> DMatrix<f64> {
    let n = mask.len();
    DMatrix::from_fn(n, n, |i, j| if i == j && mask[i] { 1.0 } else { 0.0 })
}

/// `M H`: subtract each row's mean (for `X` stored d×n this centers instances).
pub fn center_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let n = m.ncols().max(1) as f64;
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / n;
        row.add_scalar_mut(-mean);
    }
    out
}

/// `H M`: subtract each column's mean (for `F` stored n×c).
pub fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let n = m.nrows().max(1) as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

/// Half squared Euclidean distances between the columns of `z`.
///
/// Computed from explicit differences so entries are exactly symmetric,
/// nonnegative, and zero on the diagonal.
pub fn half_sq_dist_columns(z: &DMatrix<f64>) -> DMatrix<f64> {
    let m = z.ncols();
    let p = z.nrows();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let mut acc = 0.0;
            for r in 0..p {
                let diff = z[(r, i)] - z[(r, j)];
                acc += diff * diff;
            }
            out[(i, j)] = 0.5 * acc;
            out[(j, i)] = 0.5 * acc;
        }
    }
    out
}

/// `Tr(Aᵀ B)` without forming the product.
pub fn trace_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Largest absolute asymmetry `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}
