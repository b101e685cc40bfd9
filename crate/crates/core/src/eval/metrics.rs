//! Rank-based multi-label metrics plus Macro-F1.
//!
//! Tied scores use the average-rank convention: a label tied with `t − 1`
//! others sits at the mean of the positions the group occupies, and in
//! pairwise comparisons a tie counts one half.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_shapes(scores: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<()> {
    if scores.shape() != truth.shape() {
        return Err(Error::Argument(format!(
            "scores are {:?} but truth is {:?}",
            scores.shape(),
            truth.shape()
        )));
    }
    if scores.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument("scores contain NaN".into()));
    }
    Ok(())
}

/// Labels of one instance grouped by equal score, highest score first.
/// Each group is `(size, relevant_in_group)`.
fn tie_groups(scores: &[f64], relevant: &[bool]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut last = f64::NAN;
    for &j in &order {
        if groups.is_empty() || scores[j] != last {
            groups.push((0, 0));
            last = scores[j];
        }
        let g = groups.last_mut().expect("pushed above");
        g.0 += 1;
        g.1 += usize::from(relevant[j]);
    }
    groups
}

fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

fn relevance(truth: &DMatrix<f64>, i: usize) -> Vec<bool> {
    truth.row(i).iter().map(|&v| v > 0.5).collect()
}

/// Per-instance average precision, `None` when the instance has no
/// relevant label.
fn instance_ap(scores: &[f64], relevant: &[bool]) -> Option<f64> {
    let n_rel = relevant.iter().filter(|&&r| r).count();
    if n_rel == 0 {
        return None;
    }
    let (mut above, mut rel_above, mut total) = (0usize, 0usize, 0.0);
    for (size, rel) in tie_groups(scores, relevant) {
        if rel > 0 {
            let precision = (rel_above as f64 + (rel as f64 + 1.0) / 2.0) / (above as f64 + (size as f64 + 1.0) / 2.0);
            total += rel as f64 * precision;
        }
        above += size;
        rel_above += rel;
    }
    Some(total / n_rel as f64)
}

fn instance_rl(scores: &[f64], relevant: &[bool]) -> Option<f64> {
    let n_rel = relevant.iter().filter(|&&r| r).count();
    let n_irr = relevant.len() - n_rel;
    if n_rel == 0 || n_irr == 0 {
        return None;
    }
    let mut irr_above = 0usize;
    let mut misordered = 0.0;
    for (size, rel) in tie_groups(scores, relevant) {
        let irr = size - rel;
        misordered += rel as f64 * (irr_above as f64 + 0.5 * irr as f64);
        irr_above += irr;
    }
    Some(misordered / (n_rel * n_irr) as f64)
}

fn instance_oe(scores: &[f64], relevant: &[bool]) -> Option<f64> {
    if !relevant.iter().any(|&r| r) {
        return None;
    }
    let (size, rel) = tie_groups(scores, relevant)[0];
    Some((size - rel) as f64 / size as f64)
}

fn mean_over_instances(
    name: &str,
    scores: &DMatrix<f64>,
    truth: &DMatrix<f64>,
    per_instance: fn(&[f64], &[bool]) -> Option<f64>,
) -> Result<(f64, usize)> {
    check_shapes(scores, truth)?;
    let (mut total, mut used) = (0.0, 0usize);
    for i in 0..scores.nrows() {
        if let Some(v) = per_instance(&row(scores, i), &relevance(truth, i)) {
            total += v;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::UndefinedMetric(format!("{name}: no instance qualifies")));
    }
    Ok((total / used as f64, scores.nrows() - used))
}

/// Mean over instances with at least one relevant label.
pub fn average_precision(scores: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    mean_over_instances("average precision", scores, truth, instance_ap).map(|r| r.0)
}

/// Mean fraction of misordered (relevant, irrelevant) pairs. Instances
/// without both kinds of label are skipped.
pub fn ranking_loss(scores: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    mean_over_instances("ranking loss", scores, truth, instance_rl).map(|r| r.0)
}

/// Fraction of instances whose top-scored label is irrelevant; a tie at the
/// top contributes the irrelevant share of the tied group.
pub fn one_error(scores: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    mean_over_instances("one error", scores, truth, instance_oe).map(|r| r.0)
}

/// Unweighted mean of per-label F1. A label with no true and no predicted
/// positives scores 0.
pub fn macro_f1(predictions: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_shapes(predictions, truth)?;
    if truth.nrows() == 0 || truth.ncols() == 0 {
        return Err(Error::UndefinedMetric("macro F1: empty matrix".into()));
    }
    let mut total = 0.0;
    for j in 0..truth.ncols() {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for i in 0..truth.nrows() {
            match (predictions[(i, j)] > 0.5, truth[(i, j)] > 0.5) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        if denom > 0 {
            total += 2.0 * tp as f64 / denom as f64;
        }
    }
    Ok(total / truth.ncols() as f64)
}

/// The four reported metrics with per-metric exclusion counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub ap: f64,
    pub maf: f64,
    pub rl: f64,
    pub oe: f64,
    /// Instances skipped by AP and OE (no relevant label).
    pub excluded_no_relevant: usize,
    /// Instances skipped by RL (all or no labels relevant).
    pub excluded_ranking_loss: usize,
}

pub fn evaluate(scores: &DMatrix<f64>, predictions: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<MetricSummary> {
    let (ap, excluded_no_relevant) = mean_over_instances("average precision", scores, truth, instance_ap)?;
    let (rl, excluded_ranking_loss) = mean_over_instances("ranking loss", scores, truth, instance_rl)?;
    let (oe, _) = mean_over_instances("one error", scores, truth, instance_oe)?;
    Ok(MetricSummary {
        ap,
        maf: macro_f1(predictions, truth)?,
        rl,
        oe,
        excluded_no_relevant,
        excluded_ranking_loss,
    })
}
