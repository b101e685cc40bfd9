//! Saved runs and the invariant checks applied to them.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::solver::{ConvergenceTrace, FitOutcome, SolverVariant};
use crate::types::{Hyperparameters, Tolerances};

/// A fitted model as written to `run.json`. Matrices are stored as lists of
/// rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub variant: SolverVariant,
    pub hyperparameters: Hyperparameters,
    pub w: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub ranking: Vec<usize>,
    pub trace: ConvergenceTrace,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl RunRecord {
    pub fn new(outcome: &FitOutcome, hp: &Hyperparameters, variant: SolverVariant) -> Self {
        RunRecord {
            schema: crate::data::report::SCHEMA_VERSION,
            variant,
            hyperparameters: hp.clone(),
            w: rows(&outcome.state.w),
            s: rows(&outcome.state.s),
            p: rows(&outcome.state.p),
            ranking: outcome.ranking.order.clone(),
            trace: outcome.trace.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    SimplexRow,
    Constraint,
    ObjectiveIncrease,
    Shape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Nonnegative entries, zero diagonal, unit row sum, at most `k` nonzeros.
pub fn check_graph(name: &str, rows: &[Vec<f64>], k: usize, tol: &Tolerances) -> Vec<Issue> {
    let mut issues = Vec::new();
    let m = rows.len();
    for (i, row) in rows.iter().enumerate() {
        let mut problem = |message: String| {
            issues.push(Issue {
                kind: IssueKind::SimplexRow,
                message: format!("{name} row {i}: {message}"),
            })
        };
        if row.len() != m {
            problem(format!("has {} entries, expected {m}", row.len()));
            continue;
        }
        if let Some(j) = row.iter().position(|&v| !(v >= 0.0)) {
            problem(format!("entry {j} is negative or NaN ({})", row[j]));
        }
        if row[i] != 0.0 {
            problem(format!("diagonal entry is {}", row[i]));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tol.simplex {
            problem(format!("sums to {sum}"));
        }
        let nonzeros = row.iter().filter(|&&v| v != 0.0).count();
        if nonzeros > k {
            problem(format!("has {nonzeros} nonzeros, more than k = {k}"));
        }
    }
    issues
}

/// Residuals above `tol.constraint`, by 1-based outer iteration.
pub fn check_constraint(trace: &ConvergenceTrace, tol: &Tolerances) -> Vec<Issue> {
    trace
        .constraint_residuals
        .iter()
        .enumerate()
        .filter(|(_, &r)| !(r <= tol.constraint))
        .map(|(t, r)| Issue {
            kind: IssueKind::Constraint,
            message: format!("iteration {}: constraint residual {r:e} exceeds {:e}", t + 1, tol.constraint),
        })
        .collect()
}

/// Increases of the objective beyond `tol.trace_slack` relative to the
/// previous value, by 1-based outer iteration. Iteration 1 is compared with
/// the initial objective.
pub fn check_monotone(trace: &ConvergenceTrace, tol: &Tolerances) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut previous = trace.initial_objective;
    for (t, &value) in trace.objective_values.iter().enumerate() {
        if value - previous > tol.trace_slack * previous.abs().max(f64::MIN_POSITIVE) || value.is_nan() {
            issues.push(Issue {
                kind: IssueKind::ObjectiveIncrease,
                message: format!(
                    "iteration {}: objective rose from {previous:e} to {value:e} (relative {:e})",
                    t + 1,
                    (value - previous) / previous.abs()
                ),
            });
        }
        previous = value;
    }
    issues
}

pub fn check_run(run: &RunRecord, tol: &Tolerances) -> Vec<Issue> {
    let mut issues = Vec::new();
    if run.trace.objective_values.len() != run.trace.iterations_run
        || run.trace.constraint_residuals.len() != run.trace.iterations_run
    {
        issues.push(Issue {
            kind: IssueKind::Shape,
            message: format!(
                "trace lengths ({} objectives, {} residuals) disagree with {} iterations",
                run.trace.objective_values.len(),
                run.trace.constraint_residuals.len(),
                run.trace.iterations_run
            ),
        });
    }
    issues.extend(check_graph("S", &run.s, run.hyperparameters.k_s, tol));
    issues.extend(check_graph("P", &run.p, run.hyperparameters.k_p, tol));
    issues.extend(check_constraint(&run.trace, tol));
    issues.extend(check_monotone(&run.trace, tol));
    issues
}
