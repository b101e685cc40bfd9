mod common;

use accessmfs::graph::RowRegularizer;
use accessmfs::solver::{compute_b, fit, initialize, objective};
use accessmfs::validate::{check_constraint, check_graph};
use accessmfs::{Dataset, Hyperparameters, ModelState, SolverVariant, Tolerances};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use common::{gaussian, objective_oracle, random_dataset, rng};

fn zero_state(d: usize, n: usize, c: usize) -> ModelState {
    ModelState {
        w: DMatrix::zeros(d, c),
        b: DVector::zeros(c),
        f: DMatrix::zeros(n, c),
        s: DMatrix::zeros(n, n),
        p: DMatrix::zeros(c, c),
        d: DVector::zeros(d),
        regularizers: RowRegularizer {
            alpha_rows: DVector::zeros(n),
            beta_rows: DVector::zeros(c),
        },
        objective: 0.0,
    }
}

#[test]
fn objective_examples() {
    let data = Dataset::new(DMatrix::zeros(2, 3), DMatrix::zeros(3, 2), vec![true, false, true]).unwrap();
    let hp = Hyperparameters::default();
    assert_eq!(objective(&zero_state(2, 3, 2), &data, &hp), 0.0);

    // λ-term isolation: one feature row [3, 4]
    let data = Dataset::new(DMatrix::zeros(1, 3), DMatrix::zeros(3, 2), vec![true, false, true]).unwrap();
    let mut state = zero_state(1, 3, 2);
    state.w = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
    let hp = Hyperparameters { lambda: 0.7, ..Default::default() };
    assert!((objective(&state, &data, &hp) - 0.7 * 5.0).abs() < 1e-14);
}

#[test]
fn objective_matches_termwise_oracle() {
    let mut r = rng(51);
    for _ in 0..20 {
        let (n, d, c) = (r.random_range(4..12), r.random_range(2..6), r.random_range(2..4));
        let data = random_dataset(&mut r, n, d, c, 0.5);
        let mut state = zero_state(d, n, c);
        state.w = gaussian(&mut r, d, c);
        state.f = gaussian(&mut r, n, c);
        state.s = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { r.random::<f64>() });
        state.p = DMatrix::from_fn(c, c, |i, j| if i == j { 0.0 } else { r.random::<f64>() });
        state.regularizers.alpha_rows = DVector::from_fn(n, |_, _| r.random::<f64>());
        state.regularizers.beta_rows = DVector::from_fn(c, |_, _| r.random::<f64>());
        let hp = Hyperparameters {
            lambda: r.random_range(0.01..10.0),
            theta: r.random_range(0.0..10.0),
            mu: r.random_range(0.0..10.0),
            ..Default::default()
        };
        let got = objective(&state, &data, &hp);
        let want = objective_oracle(
            data.features(),
            data.labels(),
            data.labeled_mask(),
            &state.w,
            &state.f,
            &state.s,
            &state.p,
            state.regularizers.alpha_rows.as_slice(),
            state.regularizers.beta_rows.as_slice(),
            hp.lambda,
            hp.theta,
            hp.mu,
        );
        assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn bias_is_stationary() {
    let mut r = rng(52);
    let (n, d, c) = (15, 4, 3);
    let x = gaussian(&mut r, d, n);
    let w = gaussian(&mut r, d, c);
    let f = gaussian(&mut r, n, c);
    let loss = |b: &DVector<f64>| {
        let mut pred = x.transpose() * &w;
        for mut row in pred.row_iter_mut() {
            row += b.transpose();
        }
        (pred - &f).norm_squared()
    };
    let b = compute_b(&f, &w, &x);
    let base = loss(&b);
    for k in 0..c {
        for h in [1e-6, -1e-6] {
            let mut moved = b.clone();
            moved[k] += h;
            assert!(loss(&moved) > base);
        }
    }
}

#[test]
fn initialization_contract() {
    let mut r = rng(53);
    let data = random_dataset(&mut r, 30, 8, 4, 0.4);
    let hp = Hyperparameters { k_s: 4, k_p: 2, seed: 9, ..Default::default() };
    let a = initialize(&data, &hp).unwrap();
    let b = initialize(&data, &hp).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.f, data.working_labels());
    assert!((a.w.transpose() * &a.w - DMatrix::identity(4, 4)).norm() < 1e-12);
    let rows = |m: &DMatrix<f64>| m.row_iter().map(|r| r.iter().copied().collect()).collect::<Vec<Vec<f64>>>();
    let tol = Tolerances::default();
    assert!(check_graph("S", &rows(&a.s), 4, &tol).is_empty());
    assert!(check_graph("P", &rows(&a.p), 2, &tol).is_empty());
}

#[test]
fn fit_keeps_constraint_and_is_deterministic() {
    let mut r = rng(54);
    for trial in 0..6 {
        let data = random_dataset(&mut r, 40, 10, 3, 0.3);
        let corner = [1e-3, 10.0][trial % 2];
        let hp = Hyperparameters {
            lambda: corner,
            theta: [1e-3, 10.0][(trial / 2) % 2],
            mu: corner,
            k_s: 5,
            k_p: 1,
            seed: trial as u64,
            ..Default::default()
        };
        for variant in SolverVariant::ALL {
            let out = fit(&data, &hp, variant).unwrap();
            assert!(check_constraint(&out.trace, &Tolerances::default()).is_empty());
            assert_eq!(out.trace.objective_values.len(), out.trace.iterations_run);
            let again = fit(&data, &hp, variant).unwrap();
            assert_eq!(out.ranking, again.ranking);
            assert_eq!(out.trace, again.trace);
        }
    }
}

#[test]
fn variants_skip_their_graphs() {
    let mut r = rng(55);
    let data = random_dataset(&mut r, 30, 8, 4, 0.4);
    let hp = Hyperparameters { k_s: 4, k_p: 2, ..Default::default() };
    let init = initialize(&data, &hp).unwrap();
    let v3 = fit(&data, &hp, SolverVariant::NoGraphs).unwrap();
    assert_eq!((v3.trace.s_updates, v3.trace.p_updates), (0, 0));
    assert_eq!(v3.state.s, init.s);
    assert_eq!(v3.state.p, init.p);
    let v1 = fit(&data, &hp, SolverVariant::InstanceGraphOnly).unwrap();
    assert_eq!(v1.trace.p_updates, 0);
    assert_eq!(v1.trace.s_updates, v1.trace.iterations_run);
    let v2 = fit(&data, &hp, SolverVariant::LabelGraphOnly).unwrap();
    assert_eq!(v2.trace.s_updates, 0);
    assert_eq!(v2.state.s, init.s);
}

#[test]
fn fully_labeled_or_unlabeled_data_is_rejected() {
    let mut r = rng(56);
    let data = random_dataset(&mut r, 20, 5, 3, 0.5);
    let all = data.with_mask(vec![true; 20]).unwrap();
    assert!(fit(&all, &Hyperparameters::default(), SolverVariant::Full).is_err());
    let none = data.with_mask(vec![false; 20]).unwrap();
    assert!(fit(&none, &Hyperparameters::default(), SolverVariant::Full).is_err());
}
