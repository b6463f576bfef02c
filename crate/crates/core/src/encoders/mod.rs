//! Categorical encoding and numeric scaling.
//!
//! Categorical features with at most `cardinality_threshold` distinct values
//! are one-hot encoded. Wider ones get a frequency-ranked string index whose
//! level identities are hashed into a shared bucket block with FNV-1a-64.
//! Numeric features pass through and are min-max scaled by [`MinMaxScaler`].

mod matrix;
mod text;

pub use matrix::{EncodedMatrix, Provenance};
pub use text::{
    read_encoder, read_scaler, write_encoder, write_scaler, ENCODER_HEADER, SCALER_HEADER,
};

use std::collections::HashMap;

use thiserror::Error;

use crate::par;
use crate::tabular::{Column, ColumnRole, Dataset};
use crate::textio::FormatError;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("feature `{0}` was present at fit time but is missing")]
    MissingFeature(String),
    #[error("feature `{0}` changed kind since fit")]
    KindMismatch(String),
    #[error("invalid encoder parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

pub const DEFAULT_CARDINALITY_THRESHOLD: usize = 256;
pub const DEFAULT_HASH_BUCKETS: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderParams {
    /// Features with more distinct values than this are indexed and hashed.
    pub cardinality_threshold: usize,
    /// Size of the hashed block; a power of two.
    pub hash_buckets: usize,
}

impl Default for EncoderParams {
    fn default() -> Self {
        Self {
            cardinality_threshold: DEFAULT_CARDINALITY_THRESHOLD,
            hash_buckets: DEFAULT_HASH_BUCKETS,
        }
    }
}

impl EncoderParams {
    pub fn validate(&self) -> Result<(), EncodeError> {
        if self.cardinality_threshold == 0 {
            return Err(EncodeError::InvalidParams(
                "cardinality_threshold must be >= 1".into(),
            ));
        }
        if !self.hash_buckets.is_power_of_two() || self.hash_buckets > u32::MAX as usize {
            return Err(EncodeError::InvalidParams(format!(
                "hash_buckets must be a power of two, got {}",
                self.hash_buckets
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureEncoding {
    /// Ordered level list; one indicator column per level.
    OneHot {
        levels: Vec<String>,
    },
    /// Levels by descending frequency (ties by name); level `i` has index `i + 1`,
    /// index 0 being reserved for unseen or missing values.
    Hashed {
        levels: Vec<String>,
    },
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoder {
    pub name: String,
    pub encoding: FeatureEncoding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSpec {
    pub params: EncoderParams,
    pub features: Vec<FeatureEncoder>,
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Bucket of `feature=level` in a block of `buckets` columns.
pub fn hash_bucket(feature: &str, level: &str, buckets: usize) -> u32 {
    let mut key = Vec::with_capacity(feature.len() + level.len() + 1);
    key.extend_from_slice(feature.as_bytes());
    key.push(b'=');
    key.extend_from_slice(level.as_bytes());
    (fnv1a64(&key) % buckets as u64) as u32
}

/// Learns per-feature encodings from the feature columns of `d`.
pub fn fit_encoder(d: &Dataset, params: EncoderParams) -> Result<EncoderSpec, EncodeError> {
    params.validate()?;
    let idx: Vec<usize> = d.feature_indices();
    let features = par::map_slice(&idx, |&i| {
        let name = d.schema()[i].name.clone();
        let encoding = match &d.columns()[i] {
            Column::Numeric(_) => FeatureEncoding::Numeric,
            Column::Categorical(c) => {
                let mut counts = vec![0usize; c.levels().len()];
                for code in c.codes().iter().flatten() {
                    counts[*code as usize] += 1;
                }
                let mut seen: Vec<(usize, &str)> = counts
                    .iter()
                    .zip(c.levels())
                    .filter(|(n, _)| **n > 0)
                    .map(|(n, l)| (*n, l.as_str()))
                    .collect();
                if seen.len() > params.cardinality_threshold {
                    seen.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
                    FeatureEncoding::Hashed {
                        levels: seen.into_iter().map(|(_, l)| l.to_string()).collect(),
                    }
                } else {
                    seen.sort_by(|a, b| a.1.cmp(b.1));
                    FeatureEncoding::OneHot {
                        levels: seen.into_iter().map(|(_, l)| l.to_string()).collect(),
                    }
                }
            }
        };
        FeatureEncoder { name, encoding }
    });
    Ok(EncoderSpec { params, features })
}

enum Plan<'a> {
    OneHot {
        offset: u32,
        lookup: HashMap<&'a str, u32>,
        codes: &'a [Option<u32>],
        levels: &'a [String],
    },
    Hashed {
        // Bucket per dataset level code; None for levels unseen at fit.
        buckets: Vec<Option<u32>>,
        codes: &'a [Option<u32>],
    },
    Numeric {
        column: u32,
        values: &'a [Option<f64>],
        range: Option<(f64, f64)>,
    },
}

impl EncoderSpec {
    /// Column layout: one-hot blocks and numeric columns in feature order,
    /// then the shared hash block if any feature is hashed.
    pub fn columns(&self) -> Vec<Provenance> {
        let mut cols = Vec::new();
        for (f, fe) in self.features.iter().enumerate() {
            match &fe.encoding {
                FeatureEncoding::OneHot { levels } => {
                    cols.extend((0..levels.len() as u32).map(|level| Provenance::OneHot {
                        feature: f as u32,
                        level,
                    }))
                }
                FeatureEncoding::Numeric => cols.push(Provenance::Numeric { feature: f as u32 }),
                FeatureEncoding::Hashed { .. } => {}
            }
        }
        if self.has_hashed() {
            cols.extend(
                (0..self.params.hash_buckets as u32)
                    .map(|bucket| Provenance::HashBucket { bucket }),
            );
        }
        cols
    }

    fn has_hashed(&self) -> bool {
        self.features
            .iter()
            .any(|f| matches!(f.encoding, FeatureEncoding::Hashed { .. }))
    }

    /// Encodes `d`. Unseen or missing categorical values produce no entry;
    /// numerics are copied unscaled.
    pub fn transform(&self, d: &Dataset) -> Result<EncodedMatrix, EncodeError> {
        self.transform_scaled(d, None)
    }

    /// Like [`transform`](Self::transform), with numerics min-max scaled by
    /// `scaler`. Missing numerics are left as implicit zeros.
    pub fn transform_scaled(
        &self,
        d: &Dataset,
        scaler: Option<&MinMaxScaler>,
    ) -> Result<EncodedMatrix, EncodeError> {
        let ranges: Option<HashMap<&str, (f64, f64)>> = scaler.map(|s| {
            s.ranges
                .iter()
                .map(|(n, a, b)| (n.as_str(), (*a, *b)))
                .collect()
        });
        let columns = self.columns();
        let hash_offset = (columns.len()
            - if self.has_hashed() {
                self.params.hash_buckets
            } else {
                0
            }) as u32;
        let mut plans = Vec::with_capacity(self.features.len());
        let mut offset = 0u32;
        for fe in &self.features {
            let (schema, column) = d
                .column(&fe.name)
                .filter(|(s, _)| s.role == ColumnRole::Feature)
                .ok_or_else(|| EncodeError::MissingFeature(fe.name.clone()))?;
            let kind_err = || EncodeError::KindMismatch(schema.name.clone());
            plans.push(match &fe.encoding {
                FeatureEncoding::OneHot { levels } => {
                    let cat = column.as_categorical().ok_or_else(kind_err)?;
                    let lookup = levels
                        .iter()
                        .enumerate()
                        .map(|(i, l)| (l.as_str(), i as u32))
                        .collect();
                    let p = Plan::OneHot {
                        offset,
                        lookup,
                        codes: cat.codes(),
                        levels: cat.levels(),
                    };
                    offset += levels.len() as u32;
                    p
                }
                FeatureEncoding::Hashed { levels } => {
                    let cat = column.as_categorical().ok_or_else(kind_err)?;
                    let known: HashMap<&str, ()> =
                        levels.iter().map(|l| (l.as_str(), ())).collect();
                    let buckets = cat
                        .levels()
                        .iter()
                        .map(|l| {
                            known.contains_key(l.as_str()).then(|| {
                                hash_offset + hash_bucket(&fe.name, l, self.params.hash_buckets)
                            })
                        })
                        .collect();
                    Plan::Hashed {
                        buckets,
                        codes: cat.codes(),
                    }
                }
                FeatureEncoding::Numeric => {
                    let values = column.as_numeric().ok_or_else(kind_err)?;
                    let range = match &ranges {
                        Some(r) => Some(
                            *r.get(fe.name.as_str())
                                .ok_or_else(|| EncodeError::MissingFeature(fe.name.clone()))?,
                        ),
                        None => None,
                    };
                    let p = Plan::Numeric {
                        column: offset,
                        values,
                        range,
                    };
                    offset += 1;
                    p
                }
            });
        }

        // One-hot lookups by dataset code, so rows avoid string hashing.
        let onehot_maps: Vec<Option<Vec<Option<u32>>>> = plans
            .iter()
            .map(|p| match p {
                Plan::OneHot {
                    offset,
                    lookup,
                    levels,
                    ..
                } => Some(
                    levels
                        .iter()
                        .map(|l| lookup.get(l.as_str()).map(|i| offset + i))
                        .collect(),
                ),
                _ => None,
            })
            .collect();

        let rows = par::map_range(d.n_rows(), |r| {
            let mut row = Vec::with_capacity(plans.len());
            for (p, map) in plans.iter().zip(&onehot_maps) {
                match p {
                    Plan::OneHot { codes, .. } => {
                        if let Some(c) = codes[r] {
                            if let Some(col) = map.as_ref().unwrap()[c as usize] {
                                row.push((col, 1.0));
                            }
                        }
                    }
                    Plan::Hashed { buckets, codes } => {
                        if let Some(b) = codes[r].and_then(|c| buckets[c as usize]) {
                            row.push((b, 1.0));
                        }
                    }
                    Plan::Numeric {
                        column,
                        values,
                        range,
                    } => {
                        if let Some(v) = values[r] {
                            let v = range.map_or(v, |(lo, hi)| scale_one(v, lo, hi));
                            row.push((*column, v));
                        }
                    }
                }
            }
            row
        });
        Ok(EncodedMatrix::from_rows(columns, rows))
    }

    /// String index of `level` for a hashed feature (0 when unseen).
    pub fn string_index(&self, feature: &str, level: &str) -> Option<usize> {
        self.features
            .iter()
            .find(|f| f.name == feature)
            .and_then(|f| match &f.encoding {
                FeatureEncoding::Hashed { levels } => {
                    Some(levels.iter().position(|l| l == level).map_or(0, |p| p + 1))
                }
                _ => None,
            })
    }
}

/// `(v - min) / (max - min)` clipped to [0, 1]; all zeros when `max == min`.
pub fn min_max_scale(values: &[f64], min: f64, max: f64) -> Vec<f64> {
    values.iter().map(|&v| scale_one(v, min, max)).collect()
}

fn scale_one(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Per-feature `(min, max)` of the numeric features, fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub ranges: Vec<(String, f64, f64)>,
}

impl MinMaxScaler {
    pub fn fit(d: &Dataset) -> Self {
        let ranges = d
            .feature_indices()
            .into_iter()
            .filter_map(|i| {
                let v = d.columns()[i].as_numeric()?;
                let (lo, hi) = v
                    .iter()
                    .flatten()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                        (a.min(x), b.max(x))
                    });
                let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
                Some((d.schema()[i].name.clone(), lo, hi))
            })
            .collect();
        Self { ranges }
    }
}
