//! Confusion counts, the five reported metrics, precision-recall curves and
//! the Wilcoxon signed-rank test. Cross-validation lives in [`cv`].

pub mod cv;
mod wilcoxon;

pub use wilcoxon::{
    wilcoxon_exact, wilcoxon_normal, wilcoxon_signed_rank, SignedRanks, WilcoxonResult, EXACT_MAX_N,
};

use std::fmt::Write as _;

use thiserror::Error;

use crate::textio::fmt_f64;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label and prediction vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("undefined recall: no positive labels")]
    UndefinedRecall,
    #[error("invalid evaluation setting: {0}")]
    InvalidConfig(String),
    #[error("metric file line {line}: {reason}")]
    MetricFile { line: usize, reason: String },
    #[error("{0} has {1} repeats but {2} has {3}")]
    RepeatMismatch(String, usize, String, usize),
}

/// Counts with the event class as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn add(&self, o: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + o.tp,
            fn_: self.fn_ + o.fn_,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
        }
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut c = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t != 0, p != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Accuracy in percent; the rest in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub acc: f64,
    pub tpr: f64,
    pub ppv: f64,
    pub f1: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Zero denominators give 0.
pub fn metrics(c: &ConfusionMatrix) -> Metrics {
    Metrics {
        acc: 100.0 * ratio(c.tp + c.tn, c.total()),
        tpr: ratio(c.tp, c.tp + c.fn_),
        ppv: ratio(c.tp, c.tp + c.fp),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}

/// F1 as the harmonic mean of precision and recall.
pub fn f1_from_rates(tpr: f64, ppv: f64) -> f64 {
    if tpr + ppv > 0.0 {
        2.0 * tpr * ppv / (tpr + ppv)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Points in descending threshold order. The first is the recall-0 anchor at
/// threshold `+inf` with precision 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// `threshold<TAB>precision<TAB>recall` with a header row.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("threshold\tprecision\trecall\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{}\t{}\t{}",
                fmt_f64(p.threshold),
                fmt_f64(p.precision),
                fmt_f64(p.recall)
            );
        }
        s
    }
}

/// PR curve over the distinct scores (descending, ties collapsed) and its
/// area `sum (R_n - R_{n-1}) P_n` with `R_0 = 0`.
pub fn pr_curve_auc(y_true: &[u8], scores: &[f64]) -> Result<(PrCurve, f64), EvalError> {
    if y_true.len() != scores.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), scores.len()));
    }
    let positives = y_true.iter().filter(|&&y| y != 0).count() as u64;
    if positives == 0 {
        return Err(EvalError::UndefinedRecall);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![PrPoint {
        threshold: f64::INFINITY,
        precision: 1.0,
        recall: 0.0,
    }];
    let (mut tp, mut seen) = (0u64, 0u64);
    let mut auc = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += u64::from(y_true[order[i]] != 0);
            seen += 1;
            i += 1;
        }
        let precision = tp as f64 / seen as f64;
        let recall = tp as f64 / positives as f64;
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push(PrPoint {
            threshold: s,
            precision,
            recall,
        });
    }
    Ok((PrCurve { points }, auc))
}

#[cfg(test)]
mod tests;
