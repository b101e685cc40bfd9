//! One evaluation cell: split, fit, select, classify, score.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::data::split::{make_split, Split, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricSummary, MlknnModel, MlknnParams};
use crate::solver::{fit, select_features, FitOutcome, SolverVariant};
use crate::types::{Dataset, Hyperparameters};

#[derive(Clone, Debug)]
pub struct CellSpec {
    /// `hp.seed` seeds both the split and the initialization.
    pub hp: Hyperparameters,
    pub variant: SolverVariant,
    pub labeled_ratio: f64,
    pub feature_counts: Vec<usize>,
    pub mlknn: MlknnParams,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub split: Split,
    pub fit: FitOutcome,
    /// One summary per requested feature count, in request order.
    pub metrics: Vec<(usize, MetricSummary)>,
    /// Wall time of the fit alone.
    pub fit_ms: f64,
}

/// Trains ML-KNN on the labeled instances restricted to `features` and scores
/// it on the unlabeled ones against their hidden labels.
pub fn evaluate_features(data: &Dataset, split: &Split, features: &[usize], mlknn: MlknnParams) -> Result<MetricSummary> {
    let x = data.select_features(features)?;
    let train_x = x.select_columns(&split.labeled);
    let train_y = data.labels().select_rows(&split.labeled);
    let test_x = x.select_columns(&split.unlabeled);
    let test_y: DMatrix<f64> = data.labels().select_rows(&split.unlabeled);
    let model = MlknnModel::train(&train_x, &train_y, mlknn)?;
    let out = model.predict(&test_x)?;
    evaluate(&out.scores, &out.predictions, &test_y)
}

pub fn run_cell(data: &Dataset, spec: &CellSpec) -> Result<CellResult> {
    let d = data.n_features();
    if let Some(&k) = spec.feature_counts.iter().find(|&&k| k < 1 || k > d) {
        return Err(Error::Argument(format!("feature count {k} outside [1, {d}]")));
    }
    let split = make_split(
        data.n_instances(),
        SplitSpec {
            labeled_ratio: spec.labeled_ratio,
            seed: spec.hp.seed,
        },
    )?;
    let masked = split.apply(data)?;
    let start = Instant::now();
    let outcome = fit(&masked, &spec.hp, spec.variant)?;
    let fit_ms = start.elapsed().as_secs_f64() * 1e3;

    let metrics = spec
        .feature_counts
        .iter()
        .map(|&k| {
            let selected = select_features(&outcome.ranking, k)?;
            Ok((k, evaluate_features(data, &split, &selected, spec.mlknn)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellResult {
        split,
        fit: outcome,
        metrics,
        fit_ms,
    })
}

/// ML-KNN on every feature under the same split.
pub fn all_features_baseline(data: &Dataset, labeled_ratio: f64, seed: u64, mlknn: MlknnParams) -> Result<MetricSummary> {
    let split = make_split(data.n_instances(), SplitSpec { labeled_ratio, seed })?;
    let all: Vec<usize> = (0..data.n_features()).collect();
    evaluate_features(data, &split, &all, mlknn)
}
