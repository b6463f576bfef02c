//! Random forest with Gini splits, bootstrap sampling and per-node random
//! column subsets, trained on an [`EncodedMatrix`].

mod text;
mod tree;

pub use text::{read_forest, write_forest, FOREST_HEADER};
pub use tree::{Node, Tree};

use thiserror::Error;

use crate::encoders::EncodedMatrix;
use crate::textio::FormatError;
use crate::{par, seed};

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,
    #[error("need at least 2 rows to fit, got {0}")]
    TooFewRows(usize),
    #[error("matrix has {rows} rows but {labels} labels were given")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("model was fitted on {expected} columns, input has {found}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("invalid forest configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturesPerSplit {
    /// `ceil(sqrt(columns))`.
    Sqrt,
    Fixed(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, n_cols: usize) -> usize {
        let m = match self {
            FeaturesPerSplit::Sqrt => (n_cols as f64).sqrt().ceil() as usize,
            FeaturesPerSplit::Fixed(k) => k,
        };
        m.clamp(1, n_cols.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    /// `None` grows until purity or the leaf-size limit.
    pub max_depth: Option<usize>,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 50,
            min_samples_leaf: 1,
            max_depth: Some(20),
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ForestError::InvalidConfig(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(ForestError::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.features_per_split == FeaturesPerSplit::Fixed(0) {
            return Err(ForestError::InvalidConfig(
                "features_per_split must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub n_cols: usize,
    pub trees: Vec<Tree>,
}

/// Fits a forest. Tree `i` draws from the stream `seed::stream(cfg.seed, i)`.
pub fn fit(x: &EncodedMatrix, y: &[u8], cfg: &ForestConfig) -> Result<ForestModel, ForestError> {
    cfg.validate()?;
    if x.n_rows() != y.len() {
        return Err(ForestError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(ForestError::TooFewRows(y.len()));
    }
    let pos = y.iter().filter(|&&v| v != 0).count();
    if pos == 0 || pos == y.len() {
        return Err(ForestError::DegenerateLabels);
    }
    let y: Vec<u8> = y.iter().map(|&v| u8::from(v != 0)).collect();
    let csc = x.to_columns();
    let builder = tree::Builder {
        x,
        csc: &csc,
        y: &y,
        min_leaf: cfg.min_samples_leaf as u64,
        max_depth: cfg.max_depth,
        m: cfg.features_per_split.resolve(x.n_cols()),
    };
    let trees = par::map_range(cfg.n_trees, |i| {
        builder.build(&mut seed::stream(cfg.seed, i as u64))
    });
    Ok(ForestModel {
        config: *cfg,
        n_cols: x.n_cols(),
        trees,
    })
}

impl ForestModel {
    /// Mean leaf positive fraction over trees, per row.
    pub fn predict_proba(&self, x: &EncodedMatrix) -> Result<Vec<f64>, ForestError> {
        if x.n_cols() != self.n_cols {
            return Err(ForestError::ColumnMismatch {
                expected: self.n_cols,
                found: x.n_cols(),
            });
        }
        let n = self.trees.len() as f64;
        Ok(par::map_range(x.n_rows(), |r| {
            let (cols, vals) = x.row(r);
            self.trees
                .iter()
                .map(|t| t.predict_row(cols, vals))
                .sum::<f64>()
                / n
        }))
    }

    /// Class labels at `threshold` (score >= threshold is positive).
    pub fn predict(&self, x: &EncodedMatrix, threshold: f64) -> Result<Vec<u8>, ForestError> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|s| u8::from(s >= threshold))
            .collect())
    }
}

#[cfg(test)]
mod tests;
