//! Semi-supervised multi-label feature selection with adaptive instance and
//! label graphs under an uncorrelated projection constraint.
//!
//! The solver alternates four blocks: the projection `W` (a reweighted
//! generalized Procrustes step), the predicted labels `F` (a Sylvester
//! equation), and the two sparse similarity graphs `S` (instances) and `P`
//! (labels), each with a closed form. Features are ranked by the row norms of
//! `W`.

pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod labels;
pub mod linalg;
pub mod pipeline;
pub mod projection;
pub mod solver;
pub mod synth;
pub mod types;
pub mod validate;

pub use error::{Error, Result};
pub use eval::{MetricSummary, MlknnModel, MlknnParams};
pub use graph::{CostKind, PairwiseCost, RowRegularizer};
pub use solver::{fit, initialize, objective, select_features, ConvergenceTrace, FeatureRanking, FitOutcome, SolverVariant};
pub use types::{Dataset, GraphPair, Hyperparameters, ModelState, Tolerances};
