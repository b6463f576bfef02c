/// Where an encoded column came from. Feature indices refer to the
/// [`EncoderSpec`](super::EncoderSpec) feature list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    OneHot {
        feature: u32,
        level: u32,
    },
    Numeric {
        feature: u32,
    },
    /// A shared bucket of the hashed block.
    HashBucket {
        bucket: u32,
    },
}

/// Sparse row-major design matrix; absent entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    n_rows: usize,
    columns: Vec<Provenance>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl EncodedMatrix {
    /// Builds a matrix from per-row entry lists. Entries within a row are
    /// sorted and duplicate columns summed.
    pub fn from_rows(columns: Vec<Provenance>, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = col_idx.len();
            for (c, v) in row {
                debug_assert!((c as usize) < columns.len());
                if col_idx.len() > start && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            // Explicit zeros carry no information in a sparse matrix.
            let mut w = start;
            for r in start..col_idx.len() {
                if values[r] != 0.0 {
                    col_idx[w] = col_idx[r];
                    values[w] = values[r];
                    w += 1;
                }
            }
            col_idx.truncate(w);
            values.truncate(w);
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            columns,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Dense convenience constructor, mostly for tests. Columns are numeric.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let columns = (0..width as u32)
            .map(|f| Provenance::Numeric { feature: f })
            .collect();
        let rows = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, &v)| (j as u32, v)).collect())
            .collect();
        Self::from_rows(columns, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.columns
    }

    /// Sorted `(column, value)` entries of one row.
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: u32) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows)
            .map(|r| {
                let mut d = vec![0.0; self.n_cols()];
                let (cols, vals) = self.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    d[c as usize] = v;
                }
                d
            })
            .collect()
    }

    /// Column-major copy: for each column, its `(row, value)` entries by row.
    pub fn to_columns(&self) -> Vec<Vec<(u32, f64)>> {
        let mut out: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.n_cols()];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[c as usize].push((r as u32, v));
            }
        }
        out
    }
}
