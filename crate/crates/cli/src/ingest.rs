//! Reading city-size lists from text files.

use citysize::country::{RawEntity, INDICATORS};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: usize, message: String },
    #[error("{path}: no column named {column:?} in header")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: no observations")]
    Empty { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputFormat {
    /// One size per line.
    OneColumn,
    /// Header row, then records; sizes taken from `column`.
    Delimited { column: String, delimiter: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub year: Option<i32>,
    pub sizes: Vec<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, year: Option<i32>, sizes: Vec<f64>) -> Self {
        Self { name: name.into(), year, sizes }
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }
}

/// `malta_2011` or `Malta-2011` gives ("malta"/"Malta", 2011); otherwise the whole stem.
pub fn name_and_year(path: &Path) -> (String, Option<i32>) {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if let Some(pos) = stem.rfind(['_', '-']) {
        let (head, tail) = (&stem[..pos], &stem[pos + 1..]);
        if tail.len() == 4 && !head.is_empty() {
            if let Ok(year) = tail.parse() {
                return (head.to_string(), Some(year));
            }
        }
    }
    (stem, None)
}

fn parse_size(field: &str) -> Result<f64, String> {
    let field = field.trim();
    if field.is_empty() {
        return Err("empty value".into());
    }
    let v: f64 = field.parse().map_err(|_| format!("not a number: {field:?}"))?;
    if !v.is_finite() || v <= 0.0 {
        return Err(format!("size must be positive, got {field}"));
    }
    Ok(v)
}

/// Parse the contents of a file. `path` is used for the name and diagnostics.
pub fn parse(text: &str, path: &Path, format: &InputFormat) -> Result<Dataset, IngestError> {
    let row_error = |line: usize, message: String| IngestError::Row { path: path.to_path_buf(), line, message };
    let mut sizes = Vec::new();
    match format {
        InputFormat::OneColumn => {
            let body = text.trim_end();
            for (i, line) in body.lines().enumerate() {
                sizes.push(parse_size(line).map_err(|m| row_error(i + 1, m))?);
            }
        }
        InputFormat::Delimited { column, delimiter } => {
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(*delimiter)
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let csv_error = |source| IngestError::Csv { path: path.to_path_buf(), source };
            let headers = reader.headers().map_err(csv_error)?.clone();
            let idx = headers
                .iter()
                .position(|h| h == column)
                .ok_or_else(|| IngestError::MissingColumn { path: path.to_path_buf(), column: column.clone() })?;
            for record in reader.records() {
                let record = record.map_err(csv_error)?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                let field = record.get(idx).unwrap_or("");
                sizes.push(parse_size(field).map_err(|m| row_error(line, m))?);
            }
        }
    }
    if sizes.is_empty() {
        return Err(IngestError::Empty { path: path.to_path_buf() });
    }
    let (name, year) = name_and_year(path);
    Ok(Dataset { name, year, sizes })
}

pub fn ingest(path: &Path, format: &InputFormat) -> Result<Dataset, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse(&text, path, format)
}

/// Indicator table for the subset sampler: an id column plus one column per
/// name in `INDICATORS`. Empty cells become missing values.
pub fn parse_country_table(text: &str, path: &Path, id_column: &str, delimiter: u8) -> Result<Vec<RawEntity>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).trim(csv::Trim::All).from_reader(text.as_bytes());
    let csv_error = |source| IngestError::Csv { path: path.to_path_buf(), source };
    let headers = reader.headers().map_err(csv_error)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn { path: path.to_path_buf(), column: name.to_string() })
    };
    let id = find(id_column)?;
    let cols: Vec<usize> = INDICATORS.iter().map(|c| find(c)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut indicators = [None; 5];
        for (slot, &c) in indicators.iter_mut().zip(&cols) {
            let field = record.get(c).unwrap_or("");
            if !field.is_empty() {
                let v: f64 = field.parse().map_err(|_| IngestError::Row {
                    path: path.to_path_buf(),
                    line,
                    message: format!("not a number: {field:?}"),
                })?;
                *slot = Some(v);
            }
        }
        out.push(RawEntity { id: record.get(id).unwrap_or("").to_string(), indicators });
    }
    Ok(out)
}

pub fn read_country_table(path: &Path, id_column: &str, delimiter: u8) -> Result<Vec<RawEntity>, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_country_table(&text, path, id_column, delimiter)
}
