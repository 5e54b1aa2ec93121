//! Matrix Market array format, real general only.
//!
//! ```text
//! %%MatrixMarket matrix array real general
//! % optional comments
//! <rows> <cols>
//! <value>            (rows*cols values, column-major)
//! ```
//!
//! Values are written with 17 significant digits so every `f64` survives a
//! write/read cycle unchanged.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use smw_core::DenseMatrix;

use crate::error::CliError;

pub const HEADER: &str = "%%MatrixMarket matrix array real general";

/// Parses file contents; errors are plain messages, the caller adds the path.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let expected: Vec<String> = HEADER.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens != expected {
        return Err(format!("expected header '{HEADER}', found '{}'", header.trim()));
    }

    let mut body = lines
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .flat_map(str::split_whitespace);

    let mut dim = |what: &str| -> Result<usize, String> {
        let tok = body.next().ok_or(format!("missing {what} count"))?;
        tok.parse::<usize>()
            .map_err(|_| format!("invalid {what} count '{tok}'"))
    };
    let rows = dim("row")?;
    let cols = dim("column")?;
    if rows == 0 || cols == 0 {
        return Err(format!("matrix dimensions must be positive, got {rows}x{cols}"));
    }

    let expected_len = rows * cols;
    let mut values = Vec::with_capacity(expected_len);
    for tok in body {
        if values.len() == expected_len {
            return Err(format!("more than {expected_len} values for a {rows}x{cols} matrix"));
        }
        let v: f64 = tok.parse().map_err(|_| format!("invalid value '{tok}'"))?;
        if !v.is_finite() {
            return Err(format!("non-finite value '{tok}'"));
        }
        values.push(v);
    }
    if values.len() != expected_len {
        return Err(format!(
            "expected {expected_len} values for a {rows}x{cols} matrix, found {}",
            values.len()
        ));
    }
    DenseMatrix::from_column_major(rows, cols, &values).map_err(|e| e.to_string())
}

pub fn render_matrix(m: &DenseMatrix) -> String {
    let mut out = String::with_capacity(24 * m.rows() * m.cols() + 64);
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for v in m.to_column_major() {
        let _ = writeln!(out, "{v:.16e}");
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(&text).map_err(|m| CliError::parse(path, m))
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), CliError> {
    fs::write(path, render_matrix(m)).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
