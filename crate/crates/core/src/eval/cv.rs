//! Stratified, repeated k-fold cross-validation of a pipeline.
//!
//! Every step of the pipeline is fitted on the training split only. Folds
//! run in parallel and reports come back in (repeat, fold) order.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::{confusion, metrics, pr_curve_auc, ConfusionMatrix, EvalError, Metrics};
use crate::pipeline::{fit_pipeline, PipelineConfig, PipelineError, PipelineModel};
use crate::tabular::Dataset;
use crate::textio::fmt_f64;
use crate::{par, seed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Scores at or above this are predicted positive.
    pub threshold: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            repeats: 10,
            seed: 0,
            threshold: 0.5,
        }
    }
}

/// Fold of every row, per repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvPlan {
    pub folds: usize,
    pub assignment: Vec<Vec<usize>>,
}

/// Shuffles each class with its own seeded stream and deals rows round-robin,
/// so every fold gets `floor` or `ceil` of each class.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64, repeat: u64) -> Vec<usize> {
    let mut rng = seed::stream(seed, repeat);
    let mut out = vec![0; labels.len()];
    let mut next = 0;
    for class in [1u8, 0] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == class).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            out[r] = next % folds;
            next += 1;
        }
    }
    out
}

impl CvPlan {
    pub fn new(labels: &[u8], cfg: &CvConfig) -> Result<Self, EvalError> {
        if cfg.folds < 2 {
            return Err(EvalError::InvalidConfig("folds must be >= 2".into()));
        }
        if cfg.repeats < 1 {
            return Err(EvalError::InvalidConfig("repeats must be >= 1".into()));
        }
        if labels.len() < cfg.folds {
            return Err(EvalError::InvalidConfig(format!(
                "{} rows cannot fill {} folds",
                labels.len(),
                cfg.folds
            )));
        }
        let assignment = (0..cfg.repeats)
            .map(|r| stratified_folds(labels, cfg.folds, cfg.seed, r as u64))
            .collect();
        Ok(Self {
            folds: cfg.folds,
            assignment,
        })
    }

    /// `(train rows, test rows)` for one repeat and fold.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignment[repeat].len()).partition(|&r| self.assignment[repeat][r] != fold)
    }
}

/// Fits the pipeline on the training split of one fold.
pub fn fit_fold(
    d: &Dataset,
    cfg: &PipelineConfig,
    plan: &CvPlan,
    repeat: usize,
    fold: usize,
) -> Result<PipelineModel, PipelineError> {
    let (train, _) = plan.split(repeat, fold);
    fit_pipeline(&d.select_rows(&train), cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldMetrics {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub auc_pr: f64,
    /// Held-out `(row, score)` pairs.
    pub scores: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub repeat: usize,
    pub fold: usize,
    /// `Err` carries the reason the fold could not be evaluated.
    pub result: Result<FoldMetrics, String>,
}

fn run_fold(
    d: &Dataset,
    labels: &[u8],
    cfg: &PipelineConfig,
    plan: &CvPlan,
    threshold: f64,
    repeat: usize,
    fold: usize,
) -> Result<FoldMetrics, String> {
    let (train, test) = plan.split(repeat, fold);
    let train_labels: Vec<u8> = train.iter().map(|&r| labels[r]).collect();
    if train_labels.iter().all(|&y| y == train_labels[0]) {
        return Err("training split has a single class".into());
    }
    let model = fit_pipeline(&d.select_rows(&train), cfg).map_err(|e| e.to_string())?;
    let scores = model
        .score(&d.select_rows(&test))
        .map_err(|e| e.to_string())?;
    let y: Vec<u8> = test.iter().map(|&r| labels[r]).collect();
    let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s >= threshold)).collect();
    let c = confusion(&y, &pred).map_err(|e| e.to_string())?;
    let (_, auc_pr) = pr_curve_auc(&y, &scores).map_err(|e| e.to_string())?;
    Ok(FoldMetrics {
        confusion: c,
        metrics: metrics(&c),
        auc_pr,
        scores: test.into_iter().zip(scores).collect(),
    })
}

/// One report per (repeat, fold).
pub fn cross_validate(
    d: &Dataset,
    cfg: &PipelineConfig,
    cv: &CvConfig,
) -> Result<Vec<EvalReport>, PipelineError> {
    let labels = d.labels()?;
    let plan = CvPlan::new(&labels, cv)?;
    let jobs: Vec<(usize, usize)> = (0..cv.repeats)
        .flat_map(|r| (0..cv.folds).map(move |f| (r, f)))
        .collect();
    Ok(par::map_slice(&jobs, |&(repeat, fold)| EvalReport {
        repeat,
        fold,
        result: run_fold(d, &labels, cfg, &plan, cv.threshold, repeat, fold),
    }))
}

/// Fold means of one repeat, over the folds that succeeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatSummary {
    pub repeat: usize,
    pub acc: f64,
    pub tpr: f64,
    pub ppv: f64,
    pub f1: f64,
    pub auc_pr: f64,
    pub failed_folds: usize,
}

pub fn summarize(reports: &[EvalReport]) -> Vec<RepeatSummary> {
    let repeats = reports.iter().map(|r| r.repeat + 1).max().unwrap_or(0);
    (0..repeats)
        .map(|repeat| {
            let ok: Vec<&FoldMetrics> = reports
                .iter()
                .filter(|r| r.repeat == repeat)
                .filter_map(|r| r.result.as_ref().ok())
                .collect();
            let failed = reports
                .iter()
                .filter(|r| r.repeat == repeat && r.result.is_err())
                .count();
            let mean = |f: &dyn Fn(&FoldMetrics) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64
                }
            };
            RepeatSummary {
                repeat,
                acc: mean(&|m| m.metrics.acc),
                tpr: mean(&|m| m.metrics.tpr),
                ppv: mean(&|m| m.metrics.ppv),
                f1: mean(&|m| m.metrics.f1),
                auc_pr: mean(&|m| m.auc_pr),
                failed_folds: failed,
            }
        })
        .collect()
}

pub const METRIC_COLUMNS: [&str; 5] = ["ACC", "TPR", "PPV", "F1-SCORE", "AUC-PR"];

/// One row per repeat with exactly the five metric columns.
pub fn summary_tsv(summaries: &[RepeatSummary]) -> String {
    let mut s = METRIC_COLUMNS.join("\t");
    s.push('\n');
    for r in summaries {
        let _ = writeln!(
            s,
            "{}",
            [r.acc, r.tpr, r.ppv, r.f1, r.auc_pr]
                .map(fmt_f64)
                .join("\t")
        );
    }
    s
}

/// Per-fold detail, including failures and confusion counts.
pub fn folds_tsv(reports: &[EvalReport]) -> String {
    let mut s =
        String::from("repeat\tfold\tstatus\tACC\tTPR\tPPV\tF1-SCORE\tAUC-PR\tTP\tFN\tFP\tTN\n");
    for r in reports {
        let _ = match &r.result {
            Ok(m) => writeln!(
                s,
                "{}\t{}\tok\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.repeat,
                r.fold,
                fmt_f64(m.metrics.acc),
                fmt_f64(m.metrics.tpr),
                fmt_f64(m.metrics.ppv),
                fmt_f64(m.metrics.f1),
                fmt_f64(m.auc_pr),
                m.confusion.tp,
                m.confusion.fn_,
                m.confusion.fp,
                m.confusion.tn
            ),
            Err(reason) => writeln!(
                s,
                "{}\t{}\tfailed: {}\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA",
                r.repeat,
                r.fold,
                reason.replace(['\t', '\n'], " ")
            ),
        };
    }
    s
}

/// Parses a summary file back into per-repeat rows of the five metrics.
pub fn read_summary(text: &str) -> Result<Vec<[f64; 5]>, EvalError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.split('\t').ne(METRIC_COLUMNS) {
        return Err(EvalError::MetricFile {
            line: 1,
            reason: format!("expected header `{}`", METRIC_COLUMNS.join("\t")),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split('\t').map(str::parse::<f64>).collect();
        match vals {
            Ok(v) if v.len() == 5 => rows.push([v[0], v[1], v[2], v[3], v[4]]),
            _ => {
                return Err(EvalError::MetricFile {
                    line: i + 2,
                    reason: format!("expected 5 numeric fields, found `{line}`"),
                })
            }
        }
    }
    Ok(rows)
}
