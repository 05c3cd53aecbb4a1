//! Pixel-level evaluation of a predicted mask against ground truth.
//!
//! Every ratio returns 0 when its denominator is 0.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagery::GrayMask;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction is {pred:?} but ground truth is {truth:?}")]
    DimensionMismatch { pred: (u32, u32), truth: (u32, u32) },
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("cannot summarize an empty set of reports")]
    EmptyInput,
    #[error("reports use different beta sets")]
    MixedBetas,
}

/// Pixel confusion counts for one positive value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Ground-truth positives.
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }
}

pub fn confusion(pred: &GrayMask, truth: &GrayMask, positive: u8) -> Result<ConfusionCounts, MetricsError> {
    if pred.dimensions() != truth.dimensions() {
        return Err(MetricsError::DimensionMismatch { pred: pred.dimensions(), truth: truth.dimensions() });
    }
    // Indexed by (pred_positive << 1) | truth_positive.
    let mut cells = [0u64; 4];
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        cells[(((p == positive) as usize) << 1) | (t == positive) as usize] += 1;
    }
    Ok(ConfusionCounts { tn: cells[0], fn_: cells[1], fp: cells[2], tp: cells[3] })
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fp)
}

pub fn recall(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fn_)
}

pub fn iou(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fp + c.fn_)
}

/// (1+β²)·P·R / (β²·P + R).
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> Result<f64, MetricsError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(MetricsError::InvalidBeta(beta));
    }
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    Ok(if den == 0.0 { 0.0 } else { (1.0 + b2) * precision * recall / den })
}

/// IoU implied by an F1 score for binary pixel masks.
pub fn iou_from_f1(f1: f64) -> f64 {
    f1 / (2.0 - f1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FScore {
    pub beta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub iou: f64,
    pub f_scores: Vec<FScore>,
}

impl MetricReport {
    pub fn from_counts(counts: ConfusionCounts, betas: &[f64]) -> Result<Self, MetricsError> {
        let (p, r) = (precision(&counts), recall(&counts));
        let f_scores = betas
            .iter()
            .map(|&beta| f_beta(p, r, beta).map(|value| FScore { beta, value }))
            .collect::<Result<_, _>>()?;
        Ok(Self { counts, precision: p, recall: r, iou: iou(&counts), f_scores })
    }

    pub fn f(&self, beta: f64) -> Option<f64> {
        self.f_scores.iter().find(|s| s.beta == beta).map(|s| s.value)
    }
}

pub const DEFAULT_BETAS: [f64; 2] = [1.0, 2.0];

pub fn evaluate_pair(pred: &GrayMask, truth: &GrayMask, positive: u8) -> Result<MetricReport, MetricsError> {
    evaluate_pair_with_betas(pred, truth, positive, &DEFAULT_BETAS)
}

pub fn evaluate_pair_with_betas(
    pred: &GrayMask,
    truth: &GrayMask,
    positive: u8,
    betas: &[f64],
) -> Result<MetricReport, MetricsError> {
    MetricReport::from_counts(confusion(pred, truth, positive)?, betas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
}

impl Aggregate {
    /// Panics on an empty slice.
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
        Self {
            mean: sorted.iter().sum::<f64>() / n as f64,
            median,
            max: sorted[n - 1],
            min: sorted[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FAggregate {
    pub beta: f64,
    #[serde(flatten)]
    pub stats: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub precision: Aggregate,
    pub recall: Aggregate,
    pub iou: Aggregate,
    pub f_scores: Vec<FAggregate>,
}

pub fn summarize(reports: &[MetricReport]) -> Result<SummaryStats, MetricsError> {
    let first = reports.first().ok_or(MetricsError::EmptyInput)?;
    let betas: Vec<f64> = first.f_scores.iter().map(|s| s.beta).collect();
    if reports
        .iter()
        .any(|r| r.f_scores.len() != betas.len() || r.f_scores.iter().zip(&betas).any(|(s, &b)| s.beta != b))
    {
        return Err(MetricsError::MixedBetas);
    }
    let column = |f: &dyn Fn(&MetricReport) -> f64| Aggregate::of(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(SummaryStats {
        count: reports.len(),
        precision: column(&|r| r.precision),
        recall: column(&|r| r.recall),
        iou: column(&|r| r.iou),
        f_scores: betas
            .iter()
            .enumerate()
            .map(|(i, &beta)| FAggregate { beta, stats: column(&|r| r.f_scores[i].value) })
            .collect(),
    })
}

fn beta_label(beta: f64) -> String {
    if beta.fract() == 0.0 {
        format!("F{beta:.0}")
    } else {
        format!("F{beta}")
    }
}

/// Aligned text table with mean/median/max/min rows and IoU, F-scores,
/// recall and precision columns.
pub fn summary_table(summary: &SummaryStats) -> String {
    let mut headers = vec!["IoU".to_string()];
    headers.extend(summary.f_scores.iter().map(|f| beta_label(f.beta)));
    headers.push("Recall".into());
    headers.push("Precision".into());
    let mut columns = vec![summary.iou];
    columns.extend(summary.f_scores.iter().map(|f| f.stats));
    columns.push(summary.recall);
    columns.push(summary.precision);

    let mut out = format!("{:<8}", "");
    for h in &headers {
        let _ = write!(out, "{h:>10}");
    }
    out.push('\n');
    let rows: [(&str, fn(&Aggregate) -> f64); 4] =
        [("mean", |a| a.mean), ("median", |a| a.median), ("max", |a| a.max), ("min", |a| a.min)];
    for (name, pick) in rows {
        let _ = write!(out, "{name:<8}");
        for c in &columns {
            let _ = write!(out, "{:>10.3}", pick(c));
        }
        out.push('\n');
    }
    out
}
