//! Downstream classifier and metrics.

pub mod metrics;
pub mod mlknn;

pub use metrics::{average_precision, evaluate, macro_f1, one_error, ranking_loss, MetricSummary};
pub use mlknn::{MlknnModel, MlknnParams, MlknnPrediction};
