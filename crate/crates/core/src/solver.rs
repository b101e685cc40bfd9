//! The alternating solver: initialization, the W → F → S → P loop,
//! objective tracking, the graph ablations, and feature ranking.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{instance_cost, label_cost, update_p, update_s, RowRegularizer};
use crate::labels::{assemble_system, solve_f};
use crate::linalg::{center_columns, l21_norm, laplacian, row_norms, trace_inner};
use crate::projection::{graph_scatter, update_d, update_w, DataScatter, WParams};
use crate::types::{Dataset, Hyperparameters, ModelState};

/// Which graph-learning blocks take part in the fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SolverVariant {
    /// Both graphs.
    #[serde(rename = "full")]
    Full,
    /// Instance graph only.
    #[serde(rename = "variant1")]
    InstanceGraphOnly,
    /// Label graph only.
    #[serde(rename = "variant2")]
    LabelGraphOnly,
    /// Regression with the uncorrelated constraint and no graphs.
    #[serde(rename = "variant3")]
    NoGraphs,
}

impl SolverVariant {
    pub const ALL: [SolverVariant; 4] = [
        SolverVariant::Full,
        SolverVariant::InstanceGraphOnly,
        SolverVariant::LabelGraphOnly,
        SolverVariant::NoGraphs,
    ];

    pub fn uses_instance_graph(self) -> bool {
        matches!(self, SolverVariant::Full | SolverVariant::InstanceGraphOnly)
    }

    pub fn uses_label_graph(self) -> bool {
        matches!(self, SolverVariant::Full | SolverVariant::LabelGraphOnly)
    }

    /// Hyperparameters with the weights of absent graph terms set to zero.
    /// This also drops `θXL_sXᵀ` from `R` when the instance graph is absent.
    pub fn effective(self, hp: &Hyperparameters) -> Hyperparameters {
        let mut out = hp.clone();
        if !self.uses_instance_graph() {
            out.theta = 0.0;
        }
        if !self.uses_label_graph() {
            out.mu = 0.0;
        }
        out
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverVariant::Full => "full",
            SolverVariant::InstanceGraphOnly => "variant1",
            SolverVariant::LabelGraphOnly => "variant2",
            SolverVariant::NoGraphs => "variant3",
        }
    }
}

impl fmt::Display for SolverVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(SolverVariant::Full),
            "variant1" | "instance" | "instance-graph-only" => Ok(SolverVariant::InstanceGraphOnly),
            "variant2" | "label" | "label-graph-only" => Ok(SolverVariant::LabelGraphOnly),
            "variant3" | "none" | "no-graphs" => Ok(SolverVariant::NoGraphs),
            other => Err(Error::Argument(format!("unknown variant '{other}'"))),
        }
    }
}

/// Per-outer-iteration record of a fit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    /// Objective at the initial state, before any update.
    pub initial_objective: f64,
    /// Objective after each outer iteration.
    pub objective_values: Vec<f64>,
    /// `‖WᵀRW − I‖_F` after each W update.
    pub constraint_residuals: Vec<f64>,
    /// Inner W iterations used in each outer iteration.
    pub inner_iterations: Vec<usize>,
    pub iterations_run: usize,
    pub converged: bool,
    pub s_updates: usize,
    pub p_updates: usize,
    pub degenerate_rows: usize,
    pub rank_deficient_steps: usize,
}

/// Per-feature scores (row norms of W) and the descending order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
}

impl FeatureRanking {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        FeatureRanking { scores, order }
    }

    pub fn from_projection(w: &DMatrix<f64>) -> Self {
        Self::from_scores(row_norms(w).iter().copied().collect())
    }
}

/// Top `k` features of a ranking.
pub fn select_features(ranking: &FeatureRanking, k: usize) -> Result<Vec<usize>> {
    let d = ranking.order.len();
    if k < 1 || k > d {
        return Err(Error::Argument(format!("feature count {k} outside [1, {d}]")));
    }
    Ok(ranking.order[..k].to_vec())
}

/// Optimal bias for fixed `W`, `F`: `(Fᵀ1 − WᵀX1) / n`.
pub fn compute_b(f: &DMatrix<f64>, w: &DMatrix<f64>, x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.ncols() as f64;
    let f_sum = f.row_sum().transpose();
    let x_sum = x.column_sum();
    (f_sum - w.transpose() * x_sum) / n
}

/// Full objective with the bias eliminated:
///
/// `‖HXᵀW − HF‖² + λ‖W‖₂,₁ + ‖F_l − Y_l‖²
///  + θ(Tr(FᵀL_sF) + Tr(WᵀXL_sXᵀW) + Σ α_i‖s_i‖²)
///  + μ(Tr(FL_pFᵀ) + Σ β_i‖p_i‖²)`.
///
/// Pass hyperparameters through [`SolverVariant::effective`] to evaluate an
/// ablated objective.
pub fn objective(state: &ModelState, data: &Dataset, hp: &Hyperparameters) -> f64 {
    let x = data.features();
    let fit = center_columns(&(x.transpose() * &state.w)) - center_columns(&state.f);
    let mut value = fit.norm_squared() + hp.lambda * l21_norm(&state.w);

    let y = data.labels();
    for (i, &labeled) in data.labeled_mask().iter().enumerate() {
        if labeled {
            value += (state.f.row(i) - y.row(i)).norm_squared();
        }
    }
    if hp.theta != 0.0 {
        let l_s = laplacian(&state.s);
        let projected = state.w.transpose() * x;
        let smooth_f = trace_inner(&state.f, &(&l_s * &state.f));
        let smooth_w = trace_inner(&projected, &(&projected * &l_s));
        let reg: f64 = (0..state.s.nrows())
            .map(|i| state.regularizers.alpha_rows[i] * state.s.row(i).norm_squared())
            .sum();
        value += hp.theta * (smooth_f + smooth_w + reg);
    }
    if hp.mu != 0.0 {
        let l_p = laplacian(&state.p);
        let smooth = trace_inner(&state.f, &(&state.f * &l_p));
        let reg: f64 = (0..state.p.nrows())
            .map(|i| state.regularizers.beta_rows[i] * state.p.row(i).norm_squared())
            .sum();
        value += hp.mu * (smooth + reg);
    }
    value
}

/// `F = Y`, seeded Gaussian `W` with orthonormal columns, and both graphs
/// from their closed forms.
pub fn initialize(data: &Dataset, hp: &Hyperparameters) -> Result<ModelState> {
    let (d, n, c) = (data.n_features(), data.n_instances(), data.n_labels());
    hp.validate(n, d, c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let gaussian = DMatrix::from_fn(d, c, |_, _| StandardNormal.sample(&mut rng));
    let w = gaussian.qr().q();
    let f = data.working_labels();

    let s_update = update_s(&instance_cost(data.features(), &w, &f)?, hp.k_s)?;
    let p_update = update_p(&label_cost(&f), hp.k_p)?;
    let mut state = ModelState {
        b: compute_b(&f, &w, data.features()),
        d: update_d(&w, hp.epsilon),
        w,
        f,
        s: s_update.weights,
        p: p_update.weights,
        regularizers: RowRegularizer {
            alpha_rows: s_update.regularizers,
            beta_rows: p_update.regularizers,
        },
        objective: 0.0,
    };
    state.objective = objective(&state, data, hp);
    Ok(state)
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub state: ModelState,
    pub trace: ConvergenceTrace,
    pub ranking: FeatureRanking,
}

/// Runs the alternating optimization until the relative objective change
/// drops below `hp.tol_rel_obj` or `hp.max_outer_iters` is reached.
pub fn fit(data: &Dataset, hp: &Hyperparameters, variant: SolverVariant) -> Result<FitOutcome> {
    data.check_semi_supervised()?;
    let eff = variant.effective(hp);
    let mut state = initialize(data, hp)?;
    state.objective = objective(&state, data, &eff);

    let x = data.features();
    let y = data.working_labels();
    let scatter = DataScatter::new(x);
    let w_params = WParams {
        lambda: eff.lambda,
        theta: eff.theta,
        epsilon: eff.epsilon,
        max_iters: eff.max_w_iters,
        tol: eff.tol_rel_obj,
    };
    let mut trace = ConvergenceTrace {
        initial_objective: state.objective,
        ..Default::default()
    };
    let mut previous = state.objective;

    for iteration in 1..=eff.max_outer_iters {
        let l_s = laplacian(&state.s);
        let l_p = laplacian(&state.p);

        let gs = (eff.theta != 0.0).then(|| graph_scatter(x, &l_s));
        let w_update = update_w(&scatter, gs.as_ref(), &state.f, &w_params)?;
        trace
            .constraint_residuals
            .push(*w_update.residuals.last().expect("at least one inner step"));
        trace.inner_iterations.push(w_update.iterations());
        trace.rank_deficient_steps += w_update.rank_deficient_steps;
        state.w = w_update.w;
        state.d = w_update.d;

        let system = assemble_system(x, &state.w, &y, &l_s, &l_p, data.labeled_mask(), eff.theta, eff.mu)?;
        state.f = solve_f(&system)?;

        if variant.uses_instance_graph() {
            let update = update_s(&instance_cost(x, &state.w, &state.f)?, eff.k_s)?;
            state.s = update.weights;
            state.regularizers.alpha_rows = update.regularizers;
            trace.degenerate_rows += update.degenerate_rows;
            trace.s_updates += 1;
        }
        if variant.uses_label_graph() {
            let update = update_p(&label_cost(&state.f), eff.k_p)?;
            state.p = update.weights;
            state.regularizers.beta_rows = update.regularizers;
            trace.degenerate_rows += update.degenerate_rows;
            trace.p_updates += 1;
        }

        let value = objective(&state, data, &eff);
        state.objective = value;
        trace.objective_values.push(value);
        trace.iterations_run = iteration;
        log::debug!("iteration {iteration}: objective {value:.10e}");

        let change = (previous - value).abs() / previous.abs().max(f64::MIN_POSITIVE);
        previous = value;
        if change < eff.tol_rel_obj {
            trace.converged = true;
            break;
        }
    }
    state.b = compute_b(&state.f, &state.w, x);
    let ranking = FeatureRanking::from_projection(&state.w);
    Ok(FitOutcome { state, trace, ranking })
}
