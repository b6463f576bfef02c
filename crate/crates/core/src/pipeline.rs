//! The full fit/score chain: feature selection, encoding, min-max scaling and
//! the forest, fitted together on one training set.

use std::io::{self, Write};

use thiserror::Error;

use crate::encoders::{
    fit_encoder, read_encoder, read_scaler, write_encoder, write_scaler, EncodeError,
    EncoderParams, EncoderSpec, MinMaxScaler,
};
use crate::forest::{self, read_forest, write_forest, ForestConfig, ForestError, ForestModel};
use crate::selectors::{rank_features, SelectError, Selector, SelectorConfig};
use crate::tabular::{DataError, Dataset};
use crate::textio::{err, escape, expect_header, parse, unescape, value, FormatError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no features selected")]
    NoFeaturesSelected,
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSelection {
    /// Every feature (the unselected baseline).
    All,
    /// Features kept by a selector, ranked on the training data.
    Ranked {
        selector: Selector,
        config: SelectorConfig,
    },
    /// An explicit list, e.g. from a score report.
    Fixed(Vec<String>),
}

impl FeatureSelection {
    pub fn tag(&self) -> &str {
        match self {
            FeatureSelection::All => "none",
            FeatureSelection::Ranked { selector, .. } => selector.as_str(),
            FeatureSelection::Fixed(_) => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub selection: FeatureSelection,
    pub encoder: EncoderParams,
    pub forest: ForestConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub selection: String,
    pub features: Vec<String>,
    pub encoder: EncoderSpec,
    pub scaler: MinMaxScaler,
    pub forest: ForestModel,
}

/// Names of the features `selection` picks on `train`, in rank order.
pub fn select_features(
    train: &Dataset,
    selection: &FeatureSelection,
) -> Result<Vec<String>, PipelineError> {
    let names = match selection {
        FeatureSelection::All => train
            .feature_names()
            .into_iter()
            .map(String::from)
            .collect(),
        FeatureSelection::Ranked { selector, config } => rank_features(train, *selector, config)?
            .into_iter()
            .filter(|s| s.keep)
            .map(|s| s.feature)
            .collect(),
        FeatureSelection::Fixed(names) => names.clone(),
    };
    if names.is_empty() {
        return Err(PipelineError::NoFeaturesSelected);
    }
    Ok(names)
}

pub fn fit_pipeline(train: &Dataset, cfg: &PipelineConfig) -> Result<PipelineModel, PipelineError> {
    let labels = train.labels()?;
    let features = select_features(train, &cfg.selection)?;
    let names: Vec<&str> = features.iter().map(String::as_str).collect();
    let reduced = train.retain_features(&names)?;
    let encoder = fit_encoder(&reduced, cfg.encoder)?;
    let scaler = MinMaxScaler::fit(&reduced);
    let x = encoder.transform_scaled(&reduced, Some(&scaler))?;
    let forest = forest::fit(&x, &labels, &cfg.forest)?;
    Ok(PipelineModel {
        selection: cfg.selection.tag().to_string(),
        features,
        encoder,
        scaler,
        forest,
    })
}

pub const PIPELINE_HEADER: &str = "eventsel-pipeline v1";

impl PipelineModel {
    /// Event scores in [0, 1] for every row of `d`.
    pub fn score(&self, d: &Dataset) -> Result<Vec<f64>, PipelineError> {
        let x = self.encoder.transform_scaled(d, Some(&self.scaler))?;
        Ok(self.forest.predict_proba(&x)?)
    }

    /// Header, selection, then the encoder, scaler and forest sections.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{PIPELINE_HEADER}")?;
        writeln!(w, "selection\t{}", escape(&self.selection))?;
        writeln!(w, "features\t{}", self.features.len())?;
        for f in &self.features {
            writeln!(w, "feature\t{}", escape(f))?;
        }
        write_encoder(&self.encoder, &mut w)?;
        write_scaler(&self.scaler, &mut w)?;
        write_forest(&self.forest, &mut w)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("model text is UTF-8")
    }

    pub fn read(text: &str) -> Result<Self, PipelineError> {
        let mut lines = crate::textio::numbered(text);
        expect_header(&mut lines, PIPELINE_HEADER)?;
        let (n, t) = value(&mut lines, "selection")?;
        let selection = unescape(n, t)?;
        let (n, t) = value(&mut lines, "features")?;
        let count: usize = parse(n, t)?;
        let mut features = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let (n, t) = value(&mut lines, "feature")?;
            features.push(unescape(n, t)?);
        }
        let encoder = read_encoder(&mut lines)?;
        let scaler = read_scaler(&mut lines)?;
        let forest = read_forest(&mut lines)?;
        if let Some((n, t)) = lines.find(|(_, t)| !t.is_empty()) {
            return Err(err(n, format!("trailing content `{t}`")).into());
        }
        Ok(Self {
            selection,
            features,
            encoder,
            scaler,
            forest,
        })
    }
}
