use std::collections::HashMap;
use std::hash::Hash;

use super::SelectError;

/// Observed counts of feature levels (rows) against label levels (columns).
///
/// Levels with a zero marginal are removed on construction, so every
/// expected count is positive and `df = (r - 1)(c - 1) >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    observed: Vec<u64>,
    row_marginals: Vec<u64>,
    col_marginals: Vec<u64>,
    n: u64,
    r: usize,
    c: usize,
}

impl ContingencyTable {
    /// Builds a table from a row-major count matrix, pruning empty rows and columns.
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self, SelectError> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(SelectError::LengthMismatch);
        }
        let col_sums: Vec<u64> = (0..width)
            .map(|j| rows.iter().map(|r| r[j]).sum())
            .collect();
        let cols: Vec<usize> = (0..width).filter(|&j| col_sums[j] > 0).collect();
        let mut observed = Vec::new();
        let mut row_marginals = Vec::new();
        for row in rows {
            let total: u64 = cols.iter().map(|&j| row[j]).sum();
            if total > 0 {
                observed.extend(cols.iter().map(|&j| row[j]));
                row_marginals.push(total);
            }
        }
        let r = row_marginals.len();
        let c = cols.len();
        if r < 2 || c < 2 {
            return Err(SelectError::DegenerateTable { r, c });
        }
        let col_marginals = cols.iter().map(|&j| col_sums[j]).collect();
        let n = row_marginals.iter().sum();
        Ok(Self {
            observed,
            row_marginals,
            col_marginals,
            n,
            r,
            c,
        })
    }

    pub fn observed(&self, i: usize, j: usize) -> u64 {
        self.observed[i * self.c + j]
    }

    pub fn expected(&self, i: usize, j: usize) -> f64 {
        self.row_marginals[i] as f64 * self.col_marginals[j] as f64 / self.n as f64
    }

    pub fn row_marginals(&self) -> &[u64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[u64] {
        &self.col_marginals
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.r
    }

    pub fn cols(&self) -> usize {
        self.c
    }

    pub fn df(&self) -> u64 {
        ((self.r - 1) * (self.c - 1)) as u64
    }

    /// The same table with every count multiplied by `m`.
    pub fn scaled(&self, m: u64) -> Self {
        Self {
            observed: self.observed.iter().map(|o| o * m).collect(),
            row_marginals: self.row_marginals.iter().map(|o| o * m).collect(),
            col_marginals: self.col_marginals.iter().map(|o| o * m).collect(),
            n: self.n * m,
            r: self.r,
            c: self.c,
        }
    }
}

/// Cross-tabulates a feature against binary labels. Feature levels appear in
/// order of first occurrence; label columns are 0 then 1.
pub fn build_table<K: Hash + Eq>(
    feature: &[K],
    labels: &[u8],
) -> Result<ContingencyTable, SelectError> {
    if feature.len() != labels.len() || feature.is_empty() {
        return Err(SelectError::LengthMismatch);
    }
    let mut index: HashMap<&K, usize> = HashMap::new();
    let mut counts: Vec<Vec<u64>> = Vec::new();
    for (k, &y) in feature.iter().zip(labels) {
        let next = counts.len();
        let i = *index.entry(k).or_insert(next);
        if i == counts.len() {
            counts.push(vec![0, 0]);
        }
        counts[i][usize::from(y != 0)] += 1;
    }
    ContingencyTable::from_counts(&counts)
}

/// Dense variant of [`build_table`] for interned codes in `0..n_levels`;
/// `None` counts as one extra level. Rows follow code order.
pub fn build_table_codes(
    codes: &[Option<u32>],
    n_levels: usize,
    labels: &[u8],
) -> Result<ContingencyTable, SelectError> {
    if codes.len() != labels.len() || codes.is_empty() {
        return Err(SelectError::LengthMismatch);
    }
    let mut counts = vec![vec![0u64; 2]; n_levels + 1];
    for (c, &y) in codes.iter().zip(labels) {
        let i = c.map_or(n_levels, |c| c as usize);
        counts[i][usize::from(y != 0)] += 1;
    }
    ContingencyTable::from_counts(&counts)
}

/// Equal-frequency binning. Cut points sit at the `b/bins` order statistics;
/// a value equal to a cut point falls in the lower bin. Missing stays missing.
pub fn bin_numeric(column: &[Option<f64>], bins: usize) -> Vec<Option<u32>> {
    let mut sorted: Vec<f64> = column.iter().flatten().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let bins = bins.max(2);
    let mut cuts: Vec<f64> = Vec::with_capacity(bins - 1);
    if m > 0 {
        for b in 1..bins {
            let idx = (b * m).div_ceil(bins).saturating_sub(1);
            let v = sorted[idx.min(m - 1)];
            if cuts.last() != Some(&v) {
                cuts.push(v);
            }
        }
    }
    column
        .iter()
        .map(|v| v.map(|x| cuts.partition_point(|&c| c < x) as u32))
        .collect()
}
