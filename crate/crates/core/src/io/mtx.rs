use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{io_err, parse_err};
use crate::completion::ObservedEntries;
use crate::error::Result;
use crate::linalg::DenseMatrix;

/// Contents of a MatrixMarket file.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixMarket {
    /// `array` format.
    Dense(DenseMatrix),
    /// `coordinate` format.
    Coordinate(ObservedEntries),
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MatrixMarket> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_matrix_market(&text, path)
}

/// Reads an `array` file; a coordinate file is an error.
pub fn read_dense(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    match read_matrix_market(path.as_ref())? {
        MatrixMarket::Dense(m) => Ok(m),
        MatrixMarket::Coordinate(_) => Err(parse_err(path.as_ref(), 1, "expected an array (dense) file")),
    }
}

/// Reads a `coordinate` file; an array file is an error.
pub fn read_coordinate(path: impl AsRef<Path>) -> Result<ObservedEntries> {
    match read_matrix_market(path.as_ref())? {
        MatrixMarket::Coordinate(o) => Ok(o),
        MatrixMarket::Dense(_) => Err(parse_err(path.as_ref(), 1, "expected a coordinate file")),
    }
}

/// Parses file contents; `path` only labels errors.
pub fn parse_matrix_market(text: &str, path: &Path) -> Result<MatrixMarket> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") || tokens.len() != 5 {
        return Err(parse_err(path, 1, "expected '%%MatrixMarket matrix <format> real general'"));
    }
    if tokens[1] != "matrix" {
        return Err(parse_err(path, 1, format!("unsupported object '{}'", tokens[1])));
    }
    let dense = match tokens[2].as_str() {
        "array" => true,
        "coordinate" => false,
        other => return Err(parse_err(path, 1, format!("unsupported format '{other}'"))),
    };
    if !matches!(tokens[3].as_str(), "real" | "integer" | "double") {
        return Err(parse_err(path, 1, format!("unsupported field '{}'", tokens[3])));
    }
    if tokens[4] != "general" {
        return Err(parse_err(path, 1, format!("unsupported symmetry '{}'", tokens[4])));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data
        .next()
        .ok_or_else(|| parse_err(path, text.lines().count().max(1), "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(path, size_line, "malformed size line"))?;

    if dense {
        let [rows, cols] = dims[..] else {
            return Err(parse_err(path, size_line, "array size line needs 'rows cols'"));
        };
        let total = rows
            .checked_mul(cols)
            .ok_or_else(|| parse_err(path, size_line, "dimensions overflow"))?;
        let mut col_major = Vec::with_capacity(total);
        for (ln, line) in data {
            let mut it = line.split_whitespace();
            let v = parse_value(it.next(), path, ln)?;
            if it.next().is_some() {
                return Err(parse_err(path, ln, "expected one value per line"));
            }
            if col_major.len() == total {
                return Err(parse_err(path, ln, format!("more than {total} values")));
            }
            col_major.push(v);
        }
        if col_major.len() != total {
            return Err(parse_err(
                path,
                text.lines().count(),
                format!("expected {total} values, found {}", col_major.len()),
            ));
        }
        let m = DenseMatrix::from_fn(rows, cols, |i, j| col_major[j * rows + i]);
        Ok(MatrixMarket::Dense(m))
    } else {
        let [rows, cols, nnz] = dims[..] else {
            return Err(parse_err(path, size_line, "coordinate size line needs 'rows cols entries'"));
        };
        let mut entries = Vec::with_capacity(nnz);
        let mut seen = HashSet::with_capacity(nnz);
        for (ln, line) in data {
            let mut it = line.split_whitespace();
            let i = parse_index(it.next(), rows, path, ln)?;
            let j = parse_index(it.next(), cols, path, ln)?;
            let v = parse_value(it.next(), path, ln)?;
            if it.next().is_some() {
                return Err(parse_err(path, ln, "expected 'row col value'"));
            }
            if entries.len() == nnz {
                return Err(parse_err(path, ln, format!("more than {nnz} entries")));
            }
            if !seen.insert((i, j)) {
                return Err(parse_err(path, ln, format!("duplicate entry ({}, {})", i + 1, j + 1)));
            }
            entries.push((i, j, v));
        }
        if entries.len() != nnz {
            return Err(parse_err(
                path,
                text.lines().count(),
                format!("expected {nnz} entries, found {}", entries.len()),
            ));
        }
        Ok(MatrixMarket::Coordinate(ObservedEntries::new(rows, cols, entries)?))
    }
}

fn parse_value(tok: Option<&str>, path: &Path, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(path, line, "missing value"))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_index(tok: Option<&str>, bound: usize, path: &Path, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(path, line, "missing index"))?;
    match tok.parse::<usize>() {
        Ok(k) if k >= 1 && k <= bound => Ok(k - 1),
        _ => Err(parse_err(path, line, format!("index '{tok}' outside 1..={bound}"))),
    }
}

/// Writes `array real general`, column-major, 17 significant digits.
pub fn write_dense(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(24 * m.rows() * m.cols() + 64);
    out.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            let _ = writeln!(out, "{:.16e}", m.get(i, j));
        }
    }
    write_file(path.as_ref(), &out)
}

/// Writes `coordinate real general` with 1-based indices.
pub fn write_coordinate(obs: &ObservedEntries, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(40 * obs.len() + 64);
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", obs.rows(), obs.cols(), obs.len());
    for &(i, j, v) in obs.entries() {
        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    write_file(path.as_ref(), &out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}
