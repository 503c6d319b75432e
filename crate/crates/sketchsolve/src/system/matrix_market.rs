//! Matrix Market (.mtx) reader and writer, real array and coordinate formats.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, PartialEq)]
enum MmSymmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::MatrixMarketParse {
        line,
        message: message.into(),
    }
}

/// Reads a dense matrix from Matrix Market text.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DMatrix<f64>> {
    let mut lines = reader.lines().enumerate();

    let (lineno, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))
        .and_then(|(i, l)| Ok((i + 1, l?)))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(
            lineno,
            "header must start with `%%MatrixMarket matrix`",
        ));
    }
    let format = match fields[2].as_str() {
        "coordinate" => MmFormat::Coordinate,
        "array" => MmFormat::Array,
        other => return Err(parse_err(lineno, format!("unsupported format `{other}`"))),
    };
    match fields[3].as_str() {
        "real" | "integer" => {}
        other => {
            return Err(parse_err(
                lineno,
                format!("unsupported field type `{other}`; only real values are handled"),
            ))
        }
    }
    let symmetry = match fields[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        "skew-symmetric" => MmSymmetry::SkewSymmetric,
        other => return Err(parse_err(lineno, format!("unsupported symmetry `{other}`"))),
    };

    // Size line: first non-comment, non-blank line after the header.
    let mut size_line = None;
    for (i, line) in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((i + 1, trimmed.to_string()));
        break;
    }
    let (size_lineno, size_line) = size_line.ok_or_else(|| parse_err(lineno, "missing size line"))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| parse_err(size_lineno, format!("bad size token `{t}`")))
        })
        .collect::<Result<_>>()?;

    match format {
        MmFormat::Coordinate => {
            if sizes.len() != 3 {
                return Err(parse_err(size_lineno, "coordinate size line needs `rows cols nnz`"));
            }
            let (nrows, ncols, nnz) = (sizes[0], sizes[1], sizes[2]);
            if nrows == 0 || ncols == 0 {
                return Err(parse_err(size_lineno, "matrix dimensions must be positive"));
            }
            let mut m = DMatrix::zeros(nrows, ncols);
            let mut seen = 0usize;
            for (i, line) in lines {
                let lineno = i + 1;
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let toks: Vec<&str> = trimmed.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(lineno, "coordinate entry needs `i j value`"));
                }
                let r: usize = toks[0]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad row index `{}`", toks[0])))?;
                let c: usize = toks[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad column index `{}`", toks[1])))?;
                let v: f64 = toks[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad value `{}`", toks[2])))?;
                if r < 1 || r > nrows || c < 1 || c > ncols {
                    return Err(parse_err(lineno, format!("entry ({r}, {c}) out of bounds")));
                }
                m[(r - 1, c - 1)] = v;
                match symmetry {
                    MmSymmetry::General => {}
                    MmSymmetry::Symmetric => m[(c - 1, r - 1)] = v,
                    MmSymmetry::SkewSymmetric => {
                        if r != c {
                            m[(c - 1, r - 1)] = -v;
                        }
                    }
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(
                    size_lineno,
                    format!("expected {nnz} entries, found {seen}"),
                ));
            }
            Ok(m)
        }
        MmFormat::Array => {
            if sizes.len() != 2 {
                return Err(parse_err(size_lineno, "array size line needs `rows cols`"));
            }
            let (nrows, ncols) = (sizes[0], sizes[1]);
            if nrows == 0 || ncols == 0 {
                return Err(parse_err(size_lineno, "matrix dimensions must be positive"));
            }
            let mut values = Vec::new();
            for (i, line) in lines {
                let lineno = i + 1;
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                for tok in trimmed.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad value `{tok}`")))?;
                    values.push(v);
                }
            }
            // Array values run down columns; symmetric variants store only the
            // lower triangle of each column.
            let expected = match symmetry {
                MmSymmetry::General => nrows * ncols,
                MmSymmetry::Symmetric => {
                    if nrows != ncols {
                        return Err(parse_err(size_lineno, "symmetric matrix must be square"));
                    }
                    nrows * (nrows + 1) / 2
                }
                MmSymmetry::SkewSymmetric => {
                    if nrows != ncols {
                        return Err(parse_err(size_lineno, "skew-symmetric matrix must be square"));
                    }
                    nrows * (nrows - 1) / 2
                }
            };
            if values.len() != expected {
                return Err(parse_err(
                    size_lineno,
                    format!("expected {expected} array values, found {}", values.len()),
                ));
            }
            let mut m = DMatrix::zeros(nrows, ncols);
            let mut it = values.into_iter();
            match symmetry {
                MmSymmetry::General => {
                    for j in 0..ncols {
                        for i in 0..nrows {
                            m[(i, j)] = it.next().unwrap();
                        }
                    }
                }
                MmSymmetry::Symmetric => {
                    for j in 0..ncols {
                        for i in j..nrows {
                            let v = it.next().unwrap();
                            m[(i, j)] = v;
                            m[(j, i)] = v;
                        }
                    }
                }
                MmSymmetry::SkewSymmetric => {
                    for j in 0..ncols {
                        for i in (j + 1)..nrows {
                            let v = it.next().unwrap();
                            m[(i, j)] = v;
                            m[(j, i)] = -v;
                        }
                    }
                }
            }
            Ok(m)
        }
    }
}

/// Reads a dense real matrix from a `.mtx` file.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let file = File::open(path)?;
    read_matrix_market(BufReader::new(file))
}

/// Writes `m` in array format. Values are printed in shortest round-trip
/// scientific notation, so a write/load cycle reproduces entries exactly.
pub fn write_matrix_market_array(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(out, "{:e}", m[(i, j)])?;
        }
    }
    Ok(())
}

/// Writes the nonzero entries of `m` in coordinate format.
pub fn write_matrix_market_coordinate(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    let nnz = m.iter().filter(|&&v| v != 0.0).count();
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), nnz)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}
