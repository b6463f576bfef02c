use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{
    CategoricalColumn, Column, ColumnKind, ColumnSchema, DataError, Dataset, LABEL_NEGATIVE,
    LABEL_POSITIVE,
};
use crate::par;

/// How to interpret the columns of a CSV file.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Name of the binary label column. Must be present in the header.
    pub label: String,
    /// Per-column kind overrides; other columns are inferred.
    pub kinds: HashMap<String, ColumnKind>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label: "label".to_string(),
            kinds: HashMap::new(),
        }
    }
}

impl LoadOptions {
    pub fn with_label(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Self::default()
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(std::io::BufReader::new(file), opts)
}

/// Parses RFC-4180 CSV with a header row. Empty fields, `NaN` and infinities
/// become the missing marker.
pub fn read_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let width = header.len();
    let label_idx = header
        .iter()
        .position(|h| *h == opts.label)
        .ok_or_else(|| DataError::MissingLabel(opts.label.clone()))?;

    // Row-major raw fields; columns are typed afterwards, in parallel.
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); width];
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        if record.len() != width {
            let line = record.position().map_or(0, |p| p.line());
            return Err(DataError::RaggedRow {
                line,
                expected: width,
                found: record.len(),
            });
        }
        for (col, field) in raw.iter_mut().zip(record.iter()) {
            col.push(field.to_string());
        }
    }

    let built: Vec<Result<(ColumnSchema, Column), DataError>> = par::map_range(width, |i| {
        let name = &header[i];
        if i == label_idx {
            return build_label(name, &raw[i]).map(|c| (ColumnSchema::label(name.clone()), c));
        }
        let kind = opts
            .kinds
            .get(name)
            .copied()
            .unwrap_or_else(|| infer_kind(&raw[i]));
        let column = match kind {
            ColumnKind::Numeric => Column::Numeric(
                raw[i]
                    .iter()
                    .map(|s| parse_numeric(s).ok_or_else(|| non_numeric(name, s)))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .map(|v| v.filter(|x| x.is_finite()))
                    .collect(),
            ),
            ColumnKind::Categorical => Column::Categorical(CategoricalColumn::from_values(
                raw[i].iter().map(|s| (!s.is_empty()).then_some(s.as_str())),
            )),
        };
        Ok((ColumnSchema::feature(name.clone(), kind), column))
    });
    let (schema, columns): (Vec<_>, Vec<_>) = built
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    Dataset::new(schema, columns)
}

fn non_numeric(column: &str, value: &str) -> DataError {
    DataError::Schema(format!("column `{column}`: `{value}` is not numeric"))
}

/// `Some(None)` for an empty field, `Some(Some(x))` for a number, `None` if unparseable.
fn parse_numeric(s: &str) -> Option<Option<f64>> {
    let t = s.trim();
    if t.is_empty() {
        return Some(None);
    }
    t.parse::<f64>().ok().map(Some)
}

fn infer_kind(values: &[String]) -> ColumnKind {
    let mut any = false;
    for v in values {
        match parse_numeric(v) {
            None => return ColumnKind::Categorical,
            Some(Some(_)) => any = true,
            Some(None) => {}
        }
    }
    if any {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    }
}

fn build_label(name: &str, values: &[String]) -> Result<Column, DataError> {
    if let Some(bad) = values
        .iter()
        .find(|v| !v.is_empty() && v.as_str() != LABEL_NEGATIVE && v.as_str() != LABEL_POSITIVE)
    {
        return Err(DataError::InvalidLabel {
            column: name.to_string(),
            value: bad.clone(),
        });
    }
    Ok(Column::Categorical(CategoricalColumn::from_values(
        values.iter().map(|s| (!s.is_empty()).then_some(s.as_str())),
    )))
}

/// Writes the dataset as CSV; missing cells become empty fields.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(d.schema().iter().map(|s| s.name.as_str()))?;
    let mut row: Vec<String> = Vec::with_capacity(d.columns().len());
    for r in 0..d.n_rows() {
        row.clear();
        for c in d.columns() {
            row.push(match c {
                Column::Categorical(c) => c.get(r).unwrap_or("").to_string(),
                Column::Numeric(v) => v[r].map(|x| x.to_string()).unwrap_or_default(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}
