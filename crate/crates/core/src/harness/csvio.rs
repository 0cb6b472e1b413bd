//! Plain-text matrix and vector files.
//!
//! One matrix row per line, entries separated by commas, no header. Vectors
//! are single-column files. Values are written with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs;
use std::path::Path;

use crate::densela::Mat;
use crate::error::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses matrix text; `path` is only used for error context.
pub fn parse_matrix(text: &str, path: &Path) -> Result<Mat> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let row = raw
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                match tok.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    Ok(_) => Err(parse_err(path, line, format!("non-finite value {tok:?}"))),
                    Err(_) => Err(parse_err(path, line, format!("not a number: {tok:?}"))),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("ragged row: {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data"));
    }
    Mat::from_rows(&rows)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_matrix(&text, path)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let m = read_matrix(path)?;
    if m.cols() != 1 {
        return Err(parse_err(
            path,
            1,
            format!(
                "expected a single-column vector, found {} columns",
                m.cols()
            ),
        ));
    }
    Ok(m.data().to_vec())
}

pub fn matrix_to_string(m: &Mat) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format_value(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Mat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_string(m)).map_err(io_err(path))
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    write_matrix(path, &Mat::column(v)?)
}
