//! Strict CSV reading and round-trippable float formatting.
//!
//! The dialect is deliberately narrow: comma separators, `\n` line endings,
//! one mandatory header row on emitted files, no quoting. Floats are
//! written with 17 significant digits so parsing them back recovers the
//! exact bit pattern.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

/// Formats a float with 17 significant digits; `parse::<f64>()` of the
/// result returns the original value exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one CSV file: a header row and then rows of preformatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let mut first = true;
        for cell in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{cell}");
            first = false;
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let display = path.display().to_string();
    let mut f = fs::File::create(path).map_err(|e| CliError::io(&display, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&display, e))?;
    Ok(())
}

/// A numeric table read from CSV.
#[derive(Debug)]
pub struct NumericTable {
    pub rows: usize,
    pub cols: usize,
    /// Row-major cells.
    pub data: Vec<f64>,
    /// True when the first file row was a header and was skipped.
    pub had_header: bool,
}

/// Reads a rectangular numeric CSV.
///
/// If every cell of the first row fails to parse as a number, the row is
/// treated as a header and skipped. Any other non-numeric cell is an error
/// naming its 1-based file row and column; ragged rows are rejected.
pub fn read_numeric_csv(path: &Path) -> Result<NumericTable> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::io(&display, e))?;
    let mut rows: usize = 0;
    let mut cols: Option<usize> = None;
    let mut data: Vec<f64> = Vec::new();
    let mut had_header = false;

    for (line_idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if let Some(c) = cols {
            if cells.len() != c {
                return Err(CliError::Config(format!(
                    "{display}: row {} has {} cells, expected {c}",
                    line_idx + 1,
                    cells.len()
                )));
            }
        }
        let mut parsed: Vec<f64> = Vec::with_capacity(cells.len());
        let mut bad_col: Option<usize> = None;
        for (col_idx, cell) in cells.iter().enumerate() {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => parsed.push(v),
                Ok(v) => {
                    return Err(CliError::Config(format!(
                        "{display}: non-finite value {v} at row {}, column {}",
                        line_idx + 1,
                        col_idx + 1
                    )))
                }
                Err(_) => {
                    bad_col = Some(col_idx);
                    break;
                }
            }
        }
        if let Some(col_idx) = bad_col {
            // A fully non-numeric first row is a header; anything else is
            // a data error at a precise location.
            let all_non_numeric = cells.iter().all(|c| c.trim().parse::<f64>().is_err());
            if line_idx == 0 && rows == 0 && all_non_numeric {
                had_header = true;
                cols = Some(cells.len());
                continue;
            }
            return Err(CliError::Config(format!(
                "{display}: non-numeric cell `{}` at row {}, column {}",
                cells[col_idx],
                line_idx + 1,
                col_idx + 1
            )));
        }
        cols = Some(cells.len());
        rows += 1;
        data.extend(parsed);
    }

    let cols = cols.ok_or_else(|| CliError::Config(format!("{display}: file is empty")))?;
    if rows == 0 {
        return Err(CliError::Config(format!("{display}: no data rows")));
    }
    Ok(NumericTable {
        rows,
        cols,
        data,
        had_header,
    })
}
