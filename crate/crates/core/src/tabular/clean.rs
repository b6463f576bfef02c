use std::collections::HashSet;
use std::fmt::Write as _;

use super::{Column, ColumnRole, DataError, Dataset};

pub const DEFAULT_MISSING_TOKEN: &str = "__MISSING__";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericImpute {
    Median,
    DropRow,
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    /// Numeric columns with population variance at or below this are removed.
    pub variance_epsilon: f64,
    pub numeric_impute: NumericImpute,
    pub categorical_missing_token: String,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            variance_epsilon: 0.0,
            numeric_impute: NumericImpute::Median,
            categorical_missing_token: DEFAULT_MISSING_TOKEN.to_string(),
        }
    }
}

/// Why a column was pruned.
#[derive(Debug, Clone, PartialEq)]
pub enum DropMeasure {
    Variance(f64),
    Distinct(usize),
    AllMissing,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningReport {
    pub duplicates_removed: usize,
    pub rows_dropped_missing_label: usize,
    pub rows_dropped_missing_numeric: usize,
    /// (column, cells imputed), only for columns with at least one imputation.
    pub cells_imputed: Vec<(String, usize)>,
    pub columns_dropped_low_variance: Vec<(String, DropMeasure)>,
}

impl CleaningReport {
    /// `action<TAB>column<TAB>count` lines. Row-level actions use `*` as the column.
    pub fn to_tsv(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "remove_duplicates\t*\t{}", self.duplicates_removed);
        let _ = writeln!(
            s,
            "drop_missing_label\t{label}\t{}",
            self.rows_dropped_missing_label
        );
        if self.rows_dropped_missing_numeric > 0 {
            let _ = writeln!(
                s,
                "drop_missing_numeric\t*\t{}",
                self.rows_dropped_missing_numeric
            );
        }
        for (c, n) in &self.cells_imputed {
            let _ = writeln!(s, "impute\t{c}\t{n}");
        }
        for (c, m) in &self.columns_dropped_low_variance {
            let _ = match m {
                DropMeasure::Variance(v) => writeln!(s, "drop_low_variance\t{c}\t{v}"),
                DropMeasure::Distinct(k) => writeln!(s, "drop_single_level\t{c}\t{k}"),
                DropMeasure::AllMissing => writeln!(s, "drop_all_missing\t{c}\t0"),
            };
        }
        s
    }
}

/// Cleans a dataset: drops unlabeled rows, fills missing cells, removes exact
/// duplicate rows and prunes constant / low-variance features.
///
/// Deduplication and pruning repeat until neither changes anything, so the
/// output is a fixed point and a second call is a no-op.
pub fn preprocess(
    d: &Dataset,
    cfg: &PreprocessConfig,
) -> Result<(Dataset, CleaningReport), DataError> {
    if cfg.variance_epsilon.is_nan() || cfg.variance_epsilon < 0.0 {
        return Err(DataError::Schema("variance_epsilon must be >= 0".into()));
    }
    let mut report = CleaningReport::default();
    let label_idx = d.label_index();

    let label_codes = d.columns[label_idx]
        .as_categorical()
        .expect("label")
        .codes();
    let mut keep: Vec<usize> = (0..d.n_rows)
        .filter(|&r| label_codes[r].is_some())
        .collect();
    report.rows_dropped_missing_label = d.n_rows - keep.len();

    // Numeric columns with nothing observed cannot be imputed; they go first.
    let mut dead: HashSet<usize> = HashSet::new();
    for (i, (s, c)) in d.schema.iter().zip(&d.columns).enumerate() {
        if s.role == ColumnRole::Feature {
            if let Column::Numeric(v) = c {
                if keep.iter().all(|&r| v[r].is_none()) {
                    dead.insert(i);
                    report
                        .columns_dropped_low_variance
                        .push((s.name.clone(), DropMeasure::AllMissing));
                }
            }
        }
    }

    if cfg.numeric_impute == NumericImpute::DropRow {
        let before = keep.len();
        keep.retain(|&r| {
            d.columns.iter().enumerate().all(|(i, c)| match c {
                Column::Numeric(v) if !dead.contains(&i) => v[r].is_some(),
                _ => true,
            })
        });
        report.rows_dropped_missing_numeric = before - keep.len();
    }

    let mut out = d.select_rows(&keep);
    out = out.filter_columns_by_index(|i| !dead.contains(&i));

    for (s, c) in out.schema.iter().zip(out.columns.iter_mut()) {
        if s.role == ColumnRole::Label {
            continue;
        }
        let n = match c {
            Column::Categorical(cat) => cat.fill_missing(&cfg.categorical_missing_token),
            Column::Numeric(v) => match median(v) {
                Some(m) => {
                    let mut n = 0;
                    for x in v.iter_mut().filter(|x| x.is_none()) {
                        *x = Some(m);
                        n += 1;
                    }
                    n
                }
                None => 0,
            },
        };
        if n > 0 {
            report.cells_imputed.push((s.name.clone(), n));
        }
    }

    loop {
        let removed = dedup(&mut out);
        report.duplicates_removed += removed;
        let dropped = prune(&mut out, cfg.variance_epsilon);
        let changed = removed > 0 || !dropped.is_empty();
        report.columns_dropped_low_variance.extend(dropped);
        if !changed {
            break;
        }
    }

    for c in out.columns.iter_mut() {
        if let Column::Categorical(cat) = c {
            cat.compact();
        }
    }
    if out.feature_indices().is_empty() {
        return Err(DataError::NoFeatures);
    }
    Ok((out, report))
}

fn median(v: &[Option<f64>]) -> Option<f64> {
    let mut xs: Vec<f64> = v.iter().flatten().copied().collect();
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    Some(if m % 2 == 1 {
        xs[m / 2]
    } else {
        (xs[m / 2 - 1] + xs[m / 2]) / 2.0
    })
}

/// Keeps the first occurrence of every distinct full row. Returns the number removed.
fn dedup(d: &mut Dataset) -> usize {
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(d.n_rows);
    let mut keep = Vec::with_capacity(d.n_rows);
    for r in 0..d.n_rows {
        let key: Vec<u64> = d
            .columns
            .iter()
            .map(|c| match c {
                // Missing cells are gone by now except in all-missing categoricals.
                Column::Categorical(cat) => cat.codes[r].map_or(u64::MAX, u64::from),
                Column::Numeric(v) => v[r].map_or(u64::MAX, f64::to_bits),
            })
            .collect();
        if seen.insert(key) {
            keep.push(r);
        }
    }
    let removed = d.n_rows - keep.len();
    if removed > 0 {
        *d = d.select_rows(&keep);
    }
    removed
}

fn prune(d: &mut Dataset, epsilon: f64) -> Vec<(String, DropMeasure)> {
    let mut dropped = Vec::new();
    let mut drop_idx = HashSet::new();
    for (i, (s, c)) in d.schema.iter().zip(&d.columns).enumerate() {
        if s.role == ColumnRole::Label {
            continue;
        }
        let measure = match c {
            Column::Categorical(cat) => {
                let k = cat.distinct_present();
                (k <= 1).then_some(DropMeasure::Distinct(k))
            }
            Column::Numeric(v) => {
                let var = variance(v);
                (var <= epsilon).then_some(DropMeasure::Variance(var))
            }
        };
        if let Some(m) = measure {
            drop_idx.insert(i);
            dropped.push((s.name.clone(), m));
        }
    }
    if !drop_idx.is_empty() {
        *d = d.filter_columns_by_index(|i| !drop_idx.contains(&i));
    }
    dropped
}

/// Population variance over observed values; exactly 0 for a constant column.
fn variance(v: &[Option<f64>]) -> f64 {
    let xs: Vec<f64> = v.iter().flatten().copied().collect();
    if xs.is_empty() {
        return 0.0;
    }
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if lo == hi {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

impl Dataset {
    fn filter_columns_by_index<F: Fn(usize) -> bool>(&self, keep: F) -> Dataset {
        let (schema, columns) = self
            .schema
            .iter()
            .zip(&self.columns)
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, (s, c))| (s.clone(), c.clone()))
            .unzip();
        Dataset {
            schema,
            columns,
            n_rows: self.n_rows,
        }
    }
}
