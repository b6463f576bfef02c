//! Seeded synthetic event data: a rare binary label driven by a few
//! informative categorical features, plus label-independent noise features of
//! widely varying cardinality.
//!
//! Each row draws every feature level uniformly. The event probability is
//! `base * prod(lift[level])`, with `base` chosen so the marginal event rate is
//! `positive_rate`. Rows are generated in fixed-size chunks, chunk `c` using
//! the stream `seed::stream(seed, c)`, so output does not depend on threading.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::tabular::{label_column, CategoricalColumn, Column, ColumnKind, ColumnSchema, Dataset};
use crate::{par, seed};

pub const CHUNK_ROWS: usize = 8192;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Informative {
    /// One lift per level; the cardinality is `lifts.len()`.
    pub lifts: Vec<f64>,
}

impl Informative {
    pub fn cardinality(&self) -> usize {
        self.lifts.len()
    }

    fn mean_lift(&self) -> f64 {
        self.lifts.iter().sum::<f64>() / self.lifts.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub positive_rate: f64,
    pub informative: Vec<Informative>,
    /// Cardinalities of the label-independent features.
    pub noise: Vec<usize>,
    /// Adds a near-unique `id` column drawn from `10 * n_rows` levels.
    pub id_feature: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rows: 100_000,
            positive_rate: 0.005,
            informative: vec![
                Informative {
                    lifts: vec![1.0, 5.0],
                },
                Informative {
                    lifts: vec![0.5, 1.0, 1.0, 2.0, 4.0],
                },
            ],
            noise: vec![2, 10, 100, 10_000, 50_000],
            id_feature: false,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Event probability of a row with every informative feature at level 0
    /// and all lifts equal to one.
    pub fn base_probability(&self) -> f64 {
        self.positive_rate
            / self
                .informative
                .iter()
                .map(Informative::mean_lift)
                .product::<f64>()
    }

    /// Largest event probability any row can have.
    pub fn max_probability(&self) -> f64 {
        self.base_probability()
            * self
                .informative
                .iter()
                .map(|f| f.lifts.iter().copied().fold(0.0, f64::max))
                .product::<f64>()
    }

    /// Event probability of a row whose informative features take `levels`.
    pub fn event_probability(&self, levels: &[usize]) -> f64 {
        self.base_probability()
            * self
                .informative
                .iter()
                .zip(levels)
                .map(|(f, &l)| f.lifts[l])
                .product::<f64>()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.n_rows == 0 {
            return bad("n_rows must be >= 1".into());
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return bad(format!(
                "positive_rate must lie in (0, 1), got {}",
                self.positive_rate
            ));
        }
        for (i, f) in self.informative.iter().enumerate() {
            if f.cardinality() < 2 {
                return bad(format!("informative feature {i} needs at least 2 levels"));
            }
            if f.lifts.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                return bad(format!("informative feature {i} has a non-positive lift"));
            }
        }
        if let Some(c) = self.noise.iter().find(|&&c| c < 2) {
            return bad(format!("noise cardinality {c} is below 2"));
        }
        if self.noise.iter().any(|&c| c > u32::MAX as usize)
            || self.n_rows > (u32::MAX / 10) as usize
        {
            return bad("cardinality too large".into());
        }
        let p = self.max_probability();
        if p >= 1.0 {
            return bad(format!(
                "lifts imply an event probability of {p} for some rows"
            ));
        }
        Ok(())
    }
}

/// Ground truth for one generated feature.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub feature: String,
    pub role: &'static str,
    pub params: String,
}

pub struct Synthetic {
    pub data: Dataset,
    pub truth: Vec<TruthRow>,
}

struct Spec {
    name: String,
    cardinality: usize,
    prefix: &'static str,
}

fn specs(cfg: &SynthConfig) -> (Vec<Spec>, Vec<TruthRow>) {
    let mut specs = Vec::new();
    let mut truth = Vec::new();
    for (i, f) in cfg.informative.iter().enumerate() {
        let name = format!("informative_{i}");
        let lifts: Vec<String> = f.lifts.iter().map(f64::to_string).collect();
        truth.push(TruthRow {
            feature: name.clone(),
            role: "informative",
            params: format!("cardinality={};lifts={}", f.cardinality(), lifts.join(",")),
        });
        specs.push(Spec {
            name,
            cardinality: f.cardinality(),
            prefix: "l",
        });
    }
    for (i, &c) in cfg.noise.iter().enumerate() {
        let name = format!("noise_{i}");
        truth.push(TruthRow {
            feature: name.clone(),
            role: "noise",
            params: format!("cardinality={c}"),
        });
        specs.push(Spec {
            name,
            cardinality: c,
            prefix: "l",
        });
    }
    if cfg.id_feature {
        let c = 10 * cfg.n_rows;
        truth.push(TruthRow {
            feature: "id".into(),
            role: "id",
            params: format!("cardinality={c}"),
        });
        specs.push(Spec {
            name: "id".into(),
            cardinality: c,
            prefix: "u",
        });
    }
    (specs, truth)
}

/// Level codes per feature plus labels, for rows `start..end`.
fn chunk(
    cfg: &SynthConfig,
    specs: &[Spec],
    index: usize,
    start: usize,
    end: usize,
) -> (Vec<Vec<u32>>, Vec<u8>) {
    let mut rng = seed::stream(cfg.seed, index as u64);
    let n_inf = cfg.informative.len();
    let mut codes = vec![Vec::with_capacity(end - start); specs.len()];
    let mut labels = Vec::with_capacity(end - start);
    let mut levels = vec![0usize; n_inf];
    for _ in start..end {
        for (f, s) in specs.iter().enumerate() {
            let l = rng.gen_range(0..s.cardinality);
            if f < n_inf {
                levels[f] = l;
            }
            codes[f].push(l as u32);
        }
        labels.push(u8::from(rng.gen_bool(cfg.event_probability(&levels))));
    }
    (codes, labels)
}

/// Renumbers drawn levels in first-appearance order, as CSV ingestion would.
fn column(codes: &[u32], spec: &Spec) -> Column {
    let mut remap = vec![u32::MAX; spec.cardinality];
    let mut levels = Vec::new();
    let dense = codes
        .iter()
        .map(|&c| {
            let slot = &mut remap[c as usize];
            if *slot == u32::MAX {
                *slot = levels.len() as u32;
                levels.push(format!("{}{}", spec.prefix, c));
            }
            Some(*slot)
        })
        .collect();
    Column::Categorical(CategoricalColumn::from_parts(levels, dense).expect("levels are distinct"))
}

pub fn generate(cfg: &SynthConfig) -> Result<Synthetic, SynthError> {
    cfg.validate()?;
    let (specs, truth) = specs(cfg);
    let n_chunks = cfg.n_rows.div_ceil(CHUNK_ROWS);
    let parts = par::map_range(n_chunks, |c| {
        let start = c * CHUNK_ROWS;
        chunk(cfg, &specs, c, start, (start + CHUNK_ROWS).min(cfg.n_rows))
    });
    let mut codes: Vec<Vec<u32>> = vec![Vec::with_capacity(cfg.n_rows); specs.len()];
    let mut labels = Vec::with_capacity(cfg.n_rows);
    for (c, y) in parts {
        for (all, part) in codes.iter_mut().zip(c) {
            all.extend(part);
        }
        labels.extend(y);
    }
    let mut schema: Vec<ColumnSchema> = specs
        .iter()
        .map(|s| ColumnSchema::feature(s.name.clone(), ColumnKind::Categorical))
        .collect();
    let mut columns: Vec<Column> = par::map_range(specs.len(), |f| column(&codes[f], &specs[f]));
    schema.push(ColumnSchema::label("label"));
    columns.push(Column::Categorical(label_column(&labels)));
    let data = Dataset::new(schema, columns).expect("generated schema is valid");
    Ok(Synthetic { data, truth })
}

pub const TRUTH_HEADER: &str = "feature\trole\tparams";

pub fn truth_tsv(truth: &[TruthRow]) -> String {
    let mut s = format!("{TRUTH_HEADER}\n");
    for t in truth {
        let _ = writeln!(s, "{}\t{}\t{}", t.feature, t.role, t.params);
    }
    s
}

/// `data.csv` -> `data.truth.tsv`.
pub fn truth_path(csv: &std::path::Path) -> std::path::PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.truth.tsv"))
}
