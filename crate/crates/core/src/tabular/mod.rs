//! Columnar dataset representation, CSV ingestion and cleaning.

mod clean;
mod csv_io;

pub use clean::{preprocess, CleaningReport, DropMeasure, NumericImpute, PreprocessConfig};
pub use csv_io::{load_csv, read_csv, write_csv, LoadOptions};

use std::collections::{HashMap, HashSet};

use thiserror::Error;

/// Levels a label column may take.
pub const LABEL_NEGATIVE: &str = "0";
pub const LABEL_POSITIVE: &str = "1";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("label column `{0}` not found")]
    MissingLabel(String),
    #[error("label column `{column}` has value `{value}`; expected 0 or 1")]
    InvalidLabel { column: String, value: String },
    #[error("label column contains missing values; run preprocess first")]
    MissingLabelValue,
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("no features survive preprocessing")]
    NoFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnRole {
    Feature,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
}

impl ColumnSchema {
    pub fn feature(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
            role: ColumnRole::Feature,
        }
    }

    pub fn label(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            role: ColumnRole::Label,
        }
    }
}

/// Interned categorical values. `None` is the missing marker.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoricalColumn {
    levels: Vec<String>,
    codes: Vec<Option<u32>>,
}

impl CategoricalColumn {
    pub fn from_values<'a, I>(values: I) -> Self
    where
        I: IntoIterator<Item = Option<&'a str>>,
    {
        let mut index: HashMap<&'a str, u32> = HashMap::new();
        let mut levels = Vec::new();
        let codes = values
            .into_iter()
            .map(|v| {
                v.map(|s| {
                    *index.entry(s).or_insert_with(|| {
                        levels.push(s.to_string());
                        (levels.len() - 1) as u32
                    })
                })
            })
            .collect();
        Self { levels, codes }
    }

    /// Builds a column from an explicit dictionary and codes.
    pub fn from_parts(levels: Vec<String>, codes: Vec<Option<u32>>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for l in &levels {
            if !seen.insert(l.as_str()) {
                return Err(DataError::Schema(format!("duplicate level `{l}`")));
            }
        }
        if codes.iter().flatten().any(|&c| c as usize >= levels.len()) {
            return Err(DataError::Schema("level code out of range".into()));
        }
        Ok(Self { levels, codes })
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn codes(&self) -> &[Option<u32>] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn get(&self, row: usize) -> Option<&str> {
        self.codes[row].map(|c| self.levels[c as usize].as_str())
    }

    pub fn code_of(&self, level: &str) -> Option<u32> {
        self.levels
            .iter()
            .position(|l| l == level)
            .map(|p| p as u32)
    }

    pub fn missing_count(&self) -> usize {
        self.codes.iter().filter(|c| c.is_none()).count()
    }

    /// Number of distinct levels actually present in the rows.
    pub fn distinct_present(&self) -> usize {
        let mut seen = vec![false; self.levels.len()];
        let mut n = 0;
        for c in self.codes.iter().flatten() {
            if !seen[*c as usize] {
                seen[*c as usize] = true;
                n += 1;
            }
        }
        n
    }

    fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            levels: self.levels.clone(),
            codes: rows.iter().map(|&r| self.codes[r]).collect(),
        }
    }

    /// Drops dictionary entries no row refers to, keeping the order of the rest.
    fn compact(&mut self) {
        let mut used = vec![false; self.levels.len()];
        for c in self.codes.iter().flatten() {
            used[*c as usize] = true;
        }
        if used.iter().all(|&u| u) {
            return;
        }
        let mut remap = vec![u32::MAX; self.levels.len()];
        let mut levels = Vec::new();
        for (i, l) in self.levels.drain(..).enumerate() {
            if used[i] {
                remap[i] = levels.len() as u32;
                levels.push(l);
            }
        }
        self.levels = levels;
        for c in self.codes.iter_mut().flatten() {
            *c = remap[*c as usize];
        }
    }

    fn fill_missing(&mut self, token: &str) -> usize {
        let missing = self.missing_count();
        if missing == 0 {
            return 0;
        }
        let code = match self.code_of(token) {
            Some(c) => c,
            None => {
                self.levels.push(token.to_string());
                (self.levels.len() - 1) as u32
            }
        };
        for c in self.codes.iter_mut() {
            if c.is_none() {
                *c = Some(code);
            }
        }
        missing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Categorical(CategoricalColumn),
    /// `None` is the missing marker; stored values are always finite.
    Numeric(Vec<Option<f64>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Categorical(c) => c.len(),
            Column::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Categorical(_) => ColumnKind::Categorical,
            Column::Numeric(_) => ColumnKind::Numeric,
        }
    }

    pub fn as_categorical(&self) -> Option<&CategoricalColumn> {
        match self {
            Column::Categorical(c) => Some(c),
            Column::Numeric(_) => None,
        }
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match self {
            Column::Numeric(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    fn select_rows(&self, rows: &[usize]) -> Self {
        match self {
            Column::Categorical(c) => Column::Categorical(c.select_rows(rows)),
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

/// An immutable table with one binary label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(schema: Vec<ColumnSchema>, columns: Vec<Column>) -> Result<Self, DataError> {
        if schema.len() != columns.len() {
            return Err(DataError::Schema(format!(
                "{} schema entries for {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let mut names = HashSet::new();
        for s in &schema {
            if !names.insert(s.name.as_str()) {
                return Err(DataError::DuplicateColumn(s.name.clone()));
            }
        }
        let n_rows = columns.first().map_or(0, Column::len);
        if let Some((s, _)) = schema.iter().zip(&columns).find(|(_, c)| c.len() != n_rows) {
            return Err(DataError::Schema(format!(
                "column `{}` has a different length",
                s.name
            )));
        }
        for (s, c) in schema.iter().zip(&columns) {
            if s.kind != c.kind() {
                return Err(DataError::Schema(format!(
                    "column `{}` kind mismatch",
                    s.name
                )));
            }
        }
        let labels: Vec<_> = schema
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role == ColumnRole::Label)
            .collect();
        if labels.len() != 1 {
            return Err(DataError::Schema(format!(
                "expected exactly one label column, found {}",
                labels.len()
            )));
        }
        let (li, ls) = labels[0];
        let label = columns[li]
            .as_categorical()
            .ok_or_else(|| DataError::Schema("label column must be categorical".into()))?;
        if let Some(bad) = label
            .levels()
            .iter()
            .find(|l| l.as_str() != LABEL_NEGATIVE && l.as_str() != LABEL_POSITIVE)
        {
            return Err(DataError::InvalidLabel {
                column: ls.name.clone(),
                value: bad.clone(),
            });
        }
        Ok(Self {
            schema,
            columns,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn label_index(&self) -> usize {
        self.schema
            .iter()
            .position(|s| s.role == ColumnRole::Label)
            .expect("dataset invariant: one label column")
    }

    pub fn label_name(&self) -> &str {
        &self.schema[self.label_index()].name
    }

    /// Indices of feature columns in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.schema.len())
            .filter(|&i| self.schema[i].role == ColumnRole::Feature)
            .collect()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.feature_indices()
            .into_iter()
            .map(|i| self.schema[i].name.as_str())
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    pub fn column(&self, name: &str) -> Option<(&ColumnSchema, &Column)> {
        self.column_index(name)
            .map(|i| (&self.schema[i], &self.columns[i]))
    }

    /// Label values as 0/1. Fails if any label is missing.
    pub fn labels(&self) -> Result<Vec<u8>, DataError> {
        let col = self.columns[self.label_index()]
            .as_categorical()
            .expect("label is categorical");
        let pos = col.code_of(LABEL_POSITIVE);
        col.codes()
            .iter()
            .map(|c| match c {
                None => Err(DataError::MissingLabelValue),
                Some(c) => Ok(u8::from(Some(*c) == pos)),
            })
            .collect()
    }

    /// New dataset holding `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select_rows(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    /// Keeps the label plus the named features, in schema order.
    pub fn retain_features(&self, names: &[&str]) -> Result<Self, DataError> {
        for n in names {
            match self.column(n) {
                Some((s, _)) if s.role == ColumnRole::Feature => {}
                _ => return Err(DataError::UnknownColumn(n.to_string())),
            }
        }
        let keep: HashSet<&str> = names.iter().copied().collect();
        Ok(self.filter_columns(|s| s.role == ColumnRole::Label || keep.contains(s.name.as_str())))
    }

    /// Replaces the label values; used to build counterfactual datasets.
    pub fn with_labels(&self, labels: &[u8]) -> Result<Self, DataError> {
        if labels.len() != self.n_rows {
            return Err(DataError::Schema("label length mismatch".into()));
        }
        let mut out = self.clone();
        let li = out.label_index();
        out.columns[li] = Column::Categorical(label_column(labels));
        Ok(out)
    }

    fn filter_columns<F: Fn(&ColumnSchema) -> bool>(&self, keep: F) -> Self {
        let (schema, columns) = self
            .schema
            .iter()
            .zip(&self.columns)
            .filter(|(s, _)| keep(s))
            .map(|(s, c)| (s.clone(), c.clone()))
            .unzip();
        Self {
            schema,
            columns,
            n_rows: self.n_rows,
        }
    }
}

/// Builds a label column from 0/1 values.
pub fn label_column(labels: &[u8]) -> CategoricalColumn {
    CategoricalColumn::from_values(labels.iter().map(|&y| {
        Some(if y == 0 {
            LABEL_NEGATIVE
        } else {
            LABEL_POSITIVE
        })
    }))
}
