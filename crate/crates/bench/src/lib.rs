//! Fixtures shared by the criterion benches.

use accessmfs::data::{make_split, SplitSpec};
use accessmfs::graph::{label_cost, update_p};
use accessmfs::labels::{assemble_system, SylvesterSystem};
use accessmfs::linalg::laplacian;
use accessmfs::synth::{generate, SynthParams};
use accessmfs::Dataset;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Planted data with 30% of instances labeled.
pub fn planted(n: usize, d: usize, c: usize) -> Dataset {
    let synth = generate(&SynthParams {
        n_instances: n,
        n_features: d,
        n_informative: 10.min(d),
        n_labels: c,
        seed: 11,
        ..Default::default()
    })
    .expect("valid synthetic parameters");
    make_split(n, SplitSpec { labeled_ratio: 0.3, seed: 11 })
        .and_then(|s| s.apply(&synth.dataset))
        .expect("valid split")
}

pub fn uniform(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() - 0.5)
}

pub fn cost_row(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| rng.random_range(0.0..10.0)).collect()
}

/// A label system with a dense random instance graph and a learned label
/// graph.
pub fn label_system(n: usize, d: usize, c: usize) -> SylvesterSystem {
    let data = planted(n, d, c);
    let w = uniform(d, c, 2);
    let mut s = uniform(n, n, 3).abs();
    s.fill_diagonal(0.0);
    let p = update_p(&label_cost(&uniform(n, c, 4)), 1.max(c.min(4) - 1)).expect("valid k_p");
    assemble_system(
        data.features(),
        &w,
        &data.working_labels(),
        &laplacian(&s),
        &laplacian(&p.weights),
        data.labeled_mask(),
        1.0,
        1.0,
    )
    .expect("consistent shapes")
}
