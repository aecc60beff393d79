use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use cat_core::dist::{DiscretePmf, GaussianMean, SampleMatrix};
use cat_core::CatError;

/// Marks an error as caused by user input (exit code 1).
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

/// Symbols in `0..k`, separated by whitespace or commas.
pub fn parse_symbols(text: &str) -> Result<Vec<usize>, CatError> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        for f in fields(l) {
            out.push(f.parse().map_err(|_| CatError::Parse {
                line,
                msg: format!("not a symbol index: {f:?}"),
            })?);
        }
    }
    Ok(out)
}

/// One point per line, coordinates separated by whitespace or commas.
pub fn parse_rows(text: &str) -> Result<SampleMatrix<f64>, CatError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, l) in data_lines(text) {
        let row = fields(l)
            .map(|f| {
                f.parse::<f64>().map_err(|_| CatError::Parse {
                    line,
                    msg: format!("not a number: {f:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CatError::Parse {
                    line,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    SampleMatrix::from_rows(&rows)
}

/// Decimals, one or more per line.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>, CatError> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        for f in fields(l) {
            out.push(f.parse().map_err(|_| CatError::Parse {
                line,
                msg: format!("not a number: {f:?}"),
            })?);
        }
    }
    Ok(out)
}

pub fn read_pmf(path: &Path) -> Result<DiscretePmf<f64>> {
    DiscretePmf::parse_text(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn read_mean(path: &Path, smoothness: f64, size_bound: f64) -> Result<GaussianMean<f64>> {
    let coeffs = parse_numbers(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    GaussianMean::new(coeffs, smoothness, size_bound)
        .with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_and_rows() {
        assert_eq!(parse_symbols("1 2,3\n# c\n\n4\n").unwrap(), vec![1, 2, 3, 4]);
        assert!(matches!(parse_symbols("1\nx\n"), Err(CatError::Parse { line: 2, .. })));
        let m = parse_rows("0.1, 0.2\n0.3 0.4\n").unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert!(parse_rows("1 2\n3\n").is_err());
    }
}
