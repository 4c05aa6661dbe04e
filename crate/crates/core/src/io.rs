//! CSV matrices and JSON documents.
//!
//! Matrices are plain numeric CSV without a header, one row per line, printed
//! with 17 significant digits so that a round trip through text is exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Result, SaaError};
use crate::matrix::DenseMatrix;
use crate::Real;

/// Version tag written into every JSON document and headered CSV.
pub const SCHEMA: &str = "saa/1";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> SaaError {
    SaaError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn matrix_to_csv<T: Real>(m: &DenseMatrix<T>) -> String {
    let mut out = String::new();
    for r in m.row_iter() {
        let line: Vec<String> = r.iter().map(|v| fmt_f64(v.to_f64_lossy())).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv<T: Real>(text: &str, origin: &Path) -> Result<DenseMatrix<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| SaaError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map(T::lit).map_err(|_| SaaError::Parse {
                    path: origin.to_path_buf(),
                    message: format!("line {}: {field:?} is not a number", line + 1),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows).map_err(|e| SaaError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_matrix<T: Real>(path: &Path, m: &DenseMatrix<T>) -> Result<()> {
    write_text(path, &matrix_to_csv(m))
}

pub fn read_matrix<T: Real>(path: &Path) -> Result<DenseMatrix<T>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    matrix_from_csv(&text, path)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| SaaError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| SaaError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes a headered CSV; the caller supplies already formatted fields.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| SaaError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    writer.write_record(header).map_err(wrap)?;
    for r in rows {
        writer.write_record(r).map_err(wrap)?;
    }
    let bytes = writer.into_inner().map_err(|e| SaaError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_text(path, &String::from_utf8_lossy(&bytes))
}

/// One integer label per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse::<usize>().map_err(|_| SaaError::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {l:?} is not a label", i + 1),
            })
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut text = String::new();
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    write_text(path, &text)
}
