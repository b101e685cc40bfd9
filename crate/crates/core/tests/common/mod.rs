//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use accessmfs::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    gaussian(rng, rows, cols).qr().q()
}

/// Random binary labels in which every instance has at least one label, and a
/// mask with at least one labeled and one unlabeled instance.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, c: usize, labeled: f64) -> Dataset {
    let x = gaussian(rng, d, n);
    let mut y = DMatrix::from_fn(n, c, |_, _| if rng.random::<f64>() < 0.35 { 1.0 } else { 0.0 });
    for i in 0..n {
        if y.row(i).sum() == 0.0 {
            y[(i, rng.random_range(0..c))] = 1.0;
        }
    }
    let mut mask: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < labeled).collect();
    mask[0] = true;
    mask[n - 1] = false;
    Dataset::new(x, y, mask).unwrap()
}

/// Euclidean projection onto the probability simplex by bisection on the
/// shift `τ` with `Σ max(v − τ, 0) = 1`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mass = |tau: f64| v.iter().map(|x| (x - tau).max(0.0)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Minimizes `Σ m_j s_j + α‖s‖²` over the simplex on the finite entries of
/// `costs` by projected gradient descent; infinite entries stay zero.
pub fn simplex_qp(costs: &[f64], alpha: f64) -> Vec<f64> {
    let idx: Vec<usize> = (0..costs.len()).filter(|&j| costs[j].is_finite()).collect();
    let m: Vec<f64> = idx.iter().map(|&j| costs[j]).collect();
    let step = 0.25 / alpha;
    let mut s = vec![1.0 / m.len() as f64; m.len()];
    for _ in 0..20_000 {
        let moved: Vec<f64> = s.iter().zip(&m).map(|(sj, mj)| sj - step * (mj + 2.0 * alpha * sj)).collect();
        let next = project_simplex(&moved);
        let change = next.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        s = next;
        if change < 1e-15 {
            break;
        }
    }
    let mut out = vec![0.0; costs.len()];
    for (pos, &j) in idx.iter().enumerate() {
        out[j] = s[pos];
    }
    out
}

/// Solves `QF + μ F L = C` through the Kronecker form
/// `(I ⊗ Q + μ Lᵀ ⊗ I) vec(F) = vec(C)`.
pub fn kron_sylvester(q: &DMatrix<f64>, l: &DMatrix<f64>, c: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    let (n, k) = c.shape();
    let mut big = DMatrix::zeros(n * k, n * k);
    for b in 0..k {
        for a in 0..k {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if a == b {
                        v += q[(i, j)];
                    }
                    if i == j {
                        v += mu * l[(b, a)];
                    }
                    big[(a * n + i, b * n + j)] = v;
                }
            }
        }
    }
    let rhs = DVector::from_column_slice(c.as_slice());
    let sol = big.full_piv_lu().solve(&rhs).expect("oracle system is nonsingular");
    DMatrix::from_column_slice(n, k, sol.as_slice())
}

fn half_credit(a: f64, b: f64) -> f64 {
    if a > b {
        1.0
    } else if a == b {
        0.5
    } else {
        0.0
    }
}

/// Average precision straight from pairwise comparisons, ties at one half.
pub fn ap_oracle(scores: &DMatrix<f64>, truth: &DMatrix<f64>) -> Option<f64> {
    let (n, c) = scores.shape();
    let mut total = 0.0;
    let mut used = 0;
    for i in 0..n {
        let rel: Vec<usize> = (0..c).filter(|&j| truth[(i, j)] == 1.0).collect();
        if rel.is_empty() {
            continue;
        }
        let mut inst = 0.0;
        for &y in &rel {
            let mut num = 1.0;
            let mut den = 1.0;
            for j in 0..c {
                if j == y {
                    continue;
                }
                let credit = half_credit(scores[(i, j)], scores[(i, y)]);
                den += credit;
                if truth[(i, j)] == 1.0 {
                    num += credit;
                }
            }
            inst += num / den;
        }
        total += inst / rel.len() as f64;
        used += 1;
    }
    (used > 0).then(|| total / used as f64)
}

pub fn rl_oracle(scores: &DMatrix<f64>, truth: &DMatrix<f64>) -> Option<f64> {
    let (n, c) = scores.shape();
    let mut total = 0.0;
    let mut used = 0;
    for i in 0..n {
        let mut bad = 0.0;
        let mut pairs = 0;
        for r in 0..c {
            for s in 0..c {
                if truth[(i, r)] == 1.0 && truth[(i, s)] == 0.0 {
                    bad += half_credit(scores[(i, s)], scores[(i, r)]);
                    pairs += 1;
                }
            }
        }
        if pairs > 0 {
            total += bad / pairs as f64;
            used += 1;
        }
    }
    (used > 0).then(|| total / used as f64)
}

pub fn oe_oracle(scores: &DMatrix<f64>, truth: &DMatrix<f64>) -> Option<f64> {
    let (n, c) = scores.shape();
    let mut total = 0.0;
    let mut used = 0;
    for i in 0..n {
        if (0..c).all(|j| truth[(i, j)] == 0.0) {
            continue;
        }
        let top = (0..c).map(|j| scores[(i, j)]).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..c).filter(|&j| scores[(i, j)] == top).collect();
        let miss = tied.iter().filter(|&&j| truth[(i, j)] == 0.0).count();
        total += miss as f64 / tied.len() as f64;
        used += 1;
    }
    (used > 0).then(|| total / used as f64)
}

/// Per-label precision and recall, F1 = 2PR/(P+R), zero when undefined.
pub fn maf_oracle(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let (n, c) = truth.shape();
    let mut total = 0.0;
    for j in 0..c {
        let count = |p: f64, t: f64| (0..n).filter(|&i| pred[(i, j)] == p && truth[(i, j)] == t).count() as f64;
        let (tp, fp, fn_) = (count(1.0, 1.0), count(1.0, 0.0), count(0.0, 1.0));
        if tp == 0.0 {
            continue;
        }
        let precision = tp / (tp + fp);
        let recall = tp / (tp + fn_);
        total += 2.0 * precision * recall / (precision + recall);
    }
    total / c as f64
}

/// The full objective evaluated entry by entry with explicit loops.
#[allow(clippy::too_many_arguments)]
pub fn objective_oracle(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    mask: &[bool],
    w: &DMatrix<f64>,
    f: &DMatrix<f64>,
    s: &DMatrix<f64>,
    p: &DMatrix<f64>,
    alpha: &[f64],
    beta: &[f64],
    lambda: f64,
    theta: f64,
    mu: f64,
) -> f64 {
    let (d, n) = x.shape();
    let c = w.ncols();
    let proj = |i: usize, j: usize| (0..d).map(|a| x[(a, i)] * w[(a, j)]).sum::<f64>();
    let mut fit = 0.0;
    for j in 0..c {
        let pm = (0..n).map(|i| proj(i, j)).sum::<f64>() / n as f64;
        let fm = (0..n).map(|i| f[(i, j)]).sum::<f64>() / n as f64;
        for i in 0..n {
            let r = (proj(i, j) - pm) - (f[(i, j)] - fm);
            fit += r * r;
        }
    }
    let l21: f64 = (0..d).map(|a| (0..c).map(|j| w[(a, j)].powi(2)).sum::<f64>().sqrt()).sum();
    let mut sup = 0.0;
    for i in 0..n {
        if mask[i] {
            for j in 0..c {
                sup += (f[(i, j)] - y[(i, j)]).powi(2);
            }
        }
    }
    let mut inst = 0.0;
    for i in 0..n {
        for k in 0..n {
            let df: f64 = (0..c).map(|j| (f[(i, j)] - f[(k, j)]).powi(2)).sum();
            let dw: f64 = (0..c).map(|j| (proj(i, j) - proj(k, j)).powi(2)).sum();
            inst += 0.5 * s[(i, k)] * (df + dw);
        }
        inst += alpha[i] * (0..n).map(|k| s[(i, k)].powi(2)).sum::<f64>();
    }
    let mut lab = 0.0;
    for a in 0..c {
        for b in 0..c {
            let df: f64 = (0..n).map(|i| (f[(i, a)] - f[(i, b)]).powi(2)).sum();
            lab += 0.5 * p[(a, b)] * df;
        }
        lab += beta[a] * (0..c).map(|b| p[(a, b)].powi(2)).sum::<f64>();
    }
    fit + lambda * l21 + sup + theta * inst + mu * lab
}
