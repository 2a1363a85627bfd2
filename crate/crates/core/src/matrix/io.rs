//! MatrixMarket and CSV readers.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::DataMatrix;
use crate::error::{Result, SpcaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    /// Comma separated, one sample per row. `has_header` skips the first line.
    Csv {
        has_header: bool,
    },
}

impl MatrixFormat {
    /// Guesses the format from the file extension (`.mtx`/`.mm` or `.csv`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "mtx" | "mm" => Some(MatrixFormat::MatrixMarket),
            "csv" => Some(MatrixFormat::Csv { has_header: false }),
            _ => None,
        }
    }
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DataMatrix> {
    let file = File::open(path.as_ref())?;
    match format {
        MatrixFormat::MatrixMarket => read_matrix_market(BufReader::new(file)),
        MatrixFormat::Csv { has_header } => read_csv(file, has_header),
    }
}

/// Reads a dense matrix from CSV text. Rows are samples.
pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(idx + 1, |p| p.line() as usize);
            SpcaError::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        if has_header && idx == 0 {
            continue;
        }
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let row = rec
            .iter()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| SpcaError::parse(line, format!("non-numeric token {tok:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(SpcaError::parse(line, "inconsistent row length"));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(SpcaError::parse(1, "no data rows"));
    }
    DataMatrix::from_rows(&rows)
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

/// Reads a real MatrixMarket file. `coordinate` files become sparse storage,
/// `array` files dense storage. Indices in the file are 1-based.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DataMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| SpcaError::parse(1, "empty file"))?;
    let header = header?;
    let (layout, field, symmetry) = parse_header(&header)?;

    // Skip comments and blank lines up to the size line.
    let (size_line_no, size_line) = loop {
        let (no, line) = lines.next().ok_or_else(|| SpcaError::parse(1, "missing size line"))?;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        break (no, line);
    };
    let dims = size_line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| SpcaError::parse(size_line_no, format!("non-numeric token {t:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut data_lines = lines.filter_map(|(no, l)| match l {
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('%') => None,
        other => Some((no, other)),
    });

    match layout {
        Layout::Coordinate => {
            let &[m, n, nnz] = dims.as_slice() else {
                return Err(SpcaError::parse(size_line_no, "expected `rows cols entries`"));
            };
            if m == 0 || n == 0 {
                return Err(SpcaError::parse(size_line_no, "matrix must be at least 1x1"));
            }
            let mut triplets = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let (no, line) = data_lines
                    .next()
                    .ok_or_else(|| SpcaError::parse(size_line_no, format!("expected {nnz} entries")))?;
                let line = line?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                let want = if field == Field::Pattern { 2 } else { 3 };
                if toks.len() < want {
                    return Err(SpcaError::parse(no, "too few fields in entry"));
                }
                let idx = |t: &str, bound: usize| -> Result<usize> {
                    let v: usize = t
                        .parse()
                        .map_err(|_| SpcaError::parse(no, format!("non-numeric token {t:?}")))?;
                    if v == 0 || v > bound {
                        return Err(SpcaError::parse(no, format!("index {v} out of range 1..={bound}")));
                    }
                    Ok(v - 1)
                };
                let i = idx(toks[0], m)?;
                let j = idx(toks[1], n)?;
                let v = if field == Field::Pattern {
                    1.0
                } else {
                    parse_value(toks[2], no)?
                };
                triplets.push((i, j, v));
                match symmetry {
                    Symmetry::Symmetric if i != j => triplets.push((j, i, v)),
                    Symmetry::SkewSymmetric if i != j => triplets.push((j, i, -v)),
                    _ => {}
                }
            }
            if let Some((no, _)) = data_lines.next() {
                return Err(SpcaError::parse(no, format!("more than the declared {nnz} entries")));
            }
            DataMatrix::from_triplets(m, n, &triplets)
        }
        Layout::Array => {
            let &[m, n] = dims.as_slice() else {
                return Err(SpcaError::parse(size_line_no, "expected `rows cols`"));
            };
            if m == 0 || n == 0 {
                return Err(SpcaError::parse(size_line_no, "matrix must be at least 1x1"));
            }
            if symmetry != Symmetry::General && m != n {
                return Err(SpcaError::parse(size_line_no, "symmetric array must be square"));
            }
            // Column-major listing; symmetric arrays list the lower triangle only.
            let positions: Vec<(usize, usize)> = (0..n)
                .flat_map(|j| {
                    let lo = match symmetry {
                        Symmetry::General => 0,
                        Symmetry::Symmetric => j,
                        Symmetry::SkewSymmetric => j + 1,
                    };
                    (lo..m).map(move |i| (i, j))
                })
                .collect();
            let mut values = vec![0.0; m * n];
            let mut tokens = Vec::new();
            while tokens.len() < positions.len() {
                let (no, line) = data_lines
                    .next()
                    .ok_or_else(|| SpcaError::parse(size_line_no, format!("expected {} values", positions.len())))?;
                for t in line?.split_whitespace() {
                    tokens.push((no, parse_value(t, no)?));
                }
            }
            if tokens.len() > positions.len() {
                return Err(SpcaError::parse(tokens[positions.len()].0, "too many values"));
            }
            if let Some((no, _)) = data_lines.next() {
                return Err(SpcaError::parse(no, "too many values"));
            }
            for (&(i, j), &(_, v)) in positions.iter().zip(&tokens) {
                values[j * m + i] = v;
                match symmetry {
                    Symmetry::Symmetric => values[i * m + j] = v,
                    Symmetry::SkewSymmetric => values[i * m + j] = -v,
                    Symmetry::General => {}
                }
            }
            DataMatrix::from_col_major(m, n, values)
        }
    }
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| SpcaError::parse(line, format!("non-numeric token {tok:?}")))
}

fn parse_header(line: &str) -> Result<(Layout, Field, Symmetry)> {
    let toks: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(SpcaError::parse(1, "header must start with %%MatrixMarket"));
    }
    if toks.len() != 5 || toks[1] != "matrix" {
        return Err(SpcaError::parse(
            1,
            "malformed header, expected `%%MatrixMarket matrix <format> <field> <symmetry>`",
        ));
    }
    let layout = match toks[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(SpcaError::parse(1, format!("unknown format {other:?}"))),
    };
    let field = match toks[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(SpcaError::parse(1, format!("unsupported field {other:?}"))),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(SpcaError::parse(1, format!("unsupported symmetry {other:?}"))),
    };
    Ok((layout, field, symmetry))
}
