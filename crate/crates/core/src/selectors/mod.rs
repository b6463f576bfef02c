//! Filter-style feature scoring against a binary label.
//!
//! Five measures are available: the plain χ² p-value, two
//! cardinality-adjusted χ² scores, plain mutual information and an adjusted
//! mutual information. The adjusted scores compare the observed statistic
//! with the χ² critical value at the feature's own degrees of freedom, which
//! penalizes features whose many levels inflate the raw statistic.

mod table;

pub use table::{bin_numeric, build_table, build_table_codes, ContingencyTable};

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::chisq::{chi2_quantile, chi2_sf, DistError};
use crate::par;
use crate::tabular::{Column, DataError, Dataset};
use crate::textio::fmt_f64;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("degenerate table ({r} feature levels x {c} label levels after pruning)")]
    DegenerateTable { r: usize, c: usize },
    #[error("feature and label columns differ in length or are empty")]
    LengthMismatch,
    #[error("soft penalty undefined: critical value {critical} <= 1")]
    SoftPenaltyUndefined { critical: f64 },
    #[error("invalid selector config: {0}")]
    InvalidConfig(String),
    #[error("unknown selector `{0}`")]
    UnknownSelector(String),
    #[error("malformed score report line {line}: {reason}")]
    Report { line: usize, reason: String },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    /// Standard χ² test p-value, smaller is better.
    ChiSquared,
    /// `(χ² - C) / C` with `C` the critical value at `1 - alpha`.
    PAdj,
    /// `(χ² - C) / ln C`.
    PAdjSoft,
    /// Mutual information in nats.
    MutualInformation,
    /// `2·N·MI - C`; positive means significant at the feature's df.
    MiAdj,
}

impl Selector {
    pub const ALL: [Selector; 5] = [
        Selector::ChiSquared,
        Selector::PAdj,
        Selector::PAdjSoft,
        Selector::MutualInformation,
        Selector::MiAdj,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Selector::ChiSquared => "chi2_pvalue",
            Selector::PAdj => "p_adj",
            Selector::PAdjSoft => "p_adj_soft",
            Selector::MutualInformation => "mi",
            Selector::MiAdj => "mi_adj",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Selector {
    type Err = SelectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "chi2" | "chi2_pvalue" => Selector::ChiSquared,
            "p_adj" => Selector::PAdj,
            "p_adj_soft" => Selector::PAdjSoft,
            "mi" => Selector::MutualInformation,
            "mi_adj" => Selector::MiAdj,
            other => return Err(SelectError::UnknownSelector(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorConfig {
    /// Significance level; critical values are taken at `1 - alpha`.
    pub alpha: f64,
    /// Number of top-ranked features to keep.
    pub k: usize,
    /// Equal-frequency bins used to score numeric features.
    pub numeric_bins: usize,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            k: 20,
            numeric_bins: 10,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), SelectError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SelectError::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.k < 1 {
            return Err(SelectError::InvalidConfig("k must be >= 1".into()));
        }
        if self.numeric_bins < 2 {
            return Err(SelectError::InvalidConfig(
                "numeric_bins must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Pearson statistic `Σ (O - E)² / E` and its upper-tail p-value.
pub fn chi2_statistic(t: &ContingencyTable) -> Result<(f64, f64), SelectError> {
    let mut stat = 0.0;
    for i in 0..t.rows() {
        for j in 0..t.cols() {
            let e = t.expected(i, j);
            let d = t.observed(i, j) as f64 - e;
            stat += d * d / e;
        }
    }
    let p = chi2_sf(stat, t.df())?;
    Ok((stat, p))
}

fn critical_value(df: u64, alpha: f64) -> Result<f64, SelectError> {
    Ok(chi2_quantile(1.0 - alpha, df)?)
}

/// Relative excess of the observed statistic over the critical value.
/// Negative when the feature is not significant at `alpha`.
pub fn p_adj(statistic: f64, df: u64, alpha: f64) -> Result<f64, SelectError> {
    let c = critical_value(df, alpha)?;
    Ok((statistic - c) / c)
}

/// Like [`p_adj`] but divides by `ln C`, a milder penalty on large df.
pub fn p_adj_soft(statistic: f64, df: u64, alpha: f64) -> Result<f64, SelectError> {
    let c = critical_value(df, alpha)?;
    if c <= 1.0 {
        return Err(SelectError::SoftPenaltyUndefined { critical: c });
    }
    Ok((statistic - c) / c.ln())
}

/// Mutual information between feature and label, in nats.
pub fn mutual_information(t: &ContingencyTable) -> f64 {
    let n = t.n() as f64;
    let mut mi = 0.0;
    for i in 0..t.rows() {
        let row = t.row_marginals()[i] as f64;
        for j in 0..t.cols() {
            let o = t.observed(i, j);
            if o == 0 {
                continue;
            }
            let o = o as f64;
            let col = t.col_marginals()[j] as f64;
            mi += (o / n) * (o * n / (row * col)).ln();
        }
    }
    mi.max(0.0)
}

/// `2·N·MI` minus the critical value; the feature passes when positive.
pub fn mi_adj(t: &ContingencyTable, alpha: f64) -> Result<(f64, bool), SelectError> {
    let g = 2.0 * t.n() as f64 * mutual_information(t);
    let score = g - critical_value(t.df(), alpha)?;
    Ok((score, score > 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore {
    pub feature: String,
    pub selector: Selector,
    /// χ² statistic for the χ² family, MI in nats for the MI family.
    /// NaN for degenerate features.
    pub statistic: f64,
    /// 0 for degenerate features.
    pub df: u64,
    pub p_value: Option<f64>,
    /// The ranking key (the p-value itself for [`Selector::ChiSquared`]).
    pub adjusted_score: f64,
    pub keep: bool,
    pub rank: usize,
}

impl FeatureScore {
    pub fn is_degenerate(&self) -> bool {
        self.df == 0
    }
}

/// Scores one table under `selector`.
pub fn score_table(
    t: &ContingencyTable,
    selector: Selector,
    alpha: f64,
) -> Result<(f64, Option<f64>, f64), SelectError> {
    Ok(match selector {
        Selector::ChiSquared => {
            let (s, p) = chi2_statistic(t)?;
            (s, Some(p), p)
        }
        Selector::PAdj => {
            let (s, p) = chi2_statistic(t)?;
            (s, Some(p), p_adj(s, t.df(), alpha)?)
        }
        Selector::PAdjSoft => {
            let (s, p) = chi2_statistic(t)?;
            (s, Some(p), p_adj_soft(s, t.df(), alpha)?)
        }
        Selector::MutualInformation => {
            let mi = mutual_information(t);
            (mi, None, mi)
        }
        Selector::MiAdj => {
            let mi = mutual_information(t);
            let g = 2.0 * t.n() as f64 * mi;
            let (score, _) = mi_adj(t, alpha)?;
            (mi, Some(chi2_sf(g, t.df())?), score)
        }
    })
}

/// Contingency table of one feature column; numeric columns are binned first.
pub fn feature_table(
    column: &Column,
    labels: &[u8],
    numeric_bins: usize,
) -> Result<ContingencyTable, SelectError> {
    match column {
        Column::Categorical(c) => build_table_codes(c.codes(), c.levels().len(), labels),
        Column::Numeric(v) => {
            let codes = bin_numeric(v, numeric_bins);
            build_table_codes(&codes, numeric_bins, labels)
        }
    }
}

/// Scores and ranks every feature of `d` against its label.
///
/// Ranking is descending by adjusted score (ascending by p-value for the
/// plain χ² selector) with ties broken by feature name. The top `k` are kept,
/// except that `mi_adj` also requires a positive score and the plain χ²
/// selector requires `p < alpha`. Degenerate features are ranked last and
/// never kept.
pub fn rank_features(
    d: &Dataset,
    selector: Selector,
    cfg: &SelectorConfig,
) -> Result<Vec<FeatureScore>, SelectError> {
    cfg.validate()?;
    let labels = d.labels()?;
    let features = d.feature_indices();
    let scored: Vec<Result<FeatureScore, SelectError>> = par::map_slice(&features, |&i| {
        let name = d.schema()[i].name.clone();
        match feature_table(&d.columns()[i], &labels, cfg.numeric_bins) {
            Ok(t) => {
                let (statistic, p_value, adjusted_score) = score_table(&t, selector, cfg.alpha)?;
                Ok(FeatureScore {
                    feature: name,
                    selector,
                    statistic,
                    df: t.df(),
                    p_value,
                    adjusted_score,
                    keep: false,
                    rank: 0,
                })
            }
            Err(SelectError::DegenerateTable { .. }) => Ok(FeatureScore {
                feature: name,
                selector,
                statistic: f64::NAN,
                df: 0,
                p_value: None,
                adjusted_score: f64::NAN,
                keep: false,
                rank: 0,
            }),
            Err(e) => Err(e),
        }
    });
    let mut scores = scored.into_iter().collect::<Result<Vec<_>, _>>()?;

    scores.sort_by(|a, b| compare(a, b, selector));
    let mut kept = 0;
    for (i, s) in scores.iter_mut().enumerate() {
        s.rank = i + 1;
        if s.is_degenerate() || kept >= cfg.k {
            continue;
        }
        let passes = match selector {
            Selector::MiAdj => s.adjusted_score > 0.0,
            Selector::ChiSquared => s.p_value.is_some_and(|p| p < cfg.alpha),
            _ => true,
        };
        if passes {
            s.keep = true;
            kept += 1;
        }
    }
    Ok(scores)
}

fn compare(a: &FeatureScore, b: &FeatureScore, selector: Selector) -> Ordering {
    match (a.is_degenerate(), b.is_degenerate()) {
        (false, true) => return Ordering::Less,
        (true, false) => return Ordering::Greater,
        (true, true) => return a.feature.cmp(&b.feature),
        (false, false) => {}
    }
    let key = match selector {
        Selector::ChiSquared => a.adjusted_score.total_cmp(&b.adjusted_score),
        _ => b.adjusted_score.total_cmp(&a.adjusted_score),
    };
    key.then_with(|| a.feature.cmp(&b.feature))
}

pub const SCORE_HEADER: &str =
    "feature\tselector\tstatistic\tdf\tp_value\tadjusted_score\trank\tkeep";

/// Renders scores as TSV with a header row. Absent p-values print as `NA`.
pub fn scores_to_tsv(scores: &[FeatureScore]) -> String {
    let mut out = String::from(SCORE_HEADER);
    out.push('\n');
    for s in scores {
        let p = s.p_value.map_or_else(|| "NA".to_string(), fmt_f64);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            s.feature,
            s.selector,
            fmt_f64(s.statistic),
            s.df,
            p,
            fmt_f64(s.adjusted_score),
            s.rank,
            s.keep
        ));
    }
    out
}

/// Names of the features marked `keep` in a score report, in rank order.
pub fn kept_features_from_tsv(text: &str) -> Result<Vec<String>, SelectError> {
    let mut kept = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != SCORE_HEADER {
                return Err(SelectError::Report {
                    line: 1,
                    reason: "unexpected header".into(),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 8 {
            return Err(SelectError::Report {
                line: i + 1,
                reason: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        match fields[7] {
            "true" => kept.push(fields[0].to_string()),
            "false" => {}
            other => {
                return Err(SelectError::Report {
                    line: i + 1,
                    reason: format!("keep must be true/false, got `{other}`"),
                })
            }
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests;
