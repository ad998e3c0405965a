//! CSV exchange format for functional series.
//!
//! The header row holds the grid points `s_1,...,s_n`; every following row is
//! one curve, in time order. Numbers are written with 17 significant digits
//! so that reading back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{LsftsError, Result};
use crate::grid::{FunctionalSeries, Grid};

/// 17 significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_series(path: impl AsRef<Path>) -> Result<FunctionalSeries> {
    let file = File::open(path.as_ref()).map_err(|e| LsftsError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_series(file)
}

pub fn parse_series<R: Read>(reader: R) -> Result<FunctionalSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header: Option<Vec<f64>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| LsftsError::Data {
            line,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| LsftsError::Data {
                    line,
                    message: format!("column {}: `{field}` is not a number", col + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match &header {
            None => {
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(LsftsError::Data {
                        line,
                        message: "grid points must be strictly increasing".into(),
                    });
                }
                header = Some(values);
            }
            Some(points) => {
                if values.len() != points.len() {
                    return Err(LsftsError::Data {
                        line,
                        message: format!("expected {} values, found {}", points.len(), values.len()),
                    });
                }
                if let Some(col) = values.iter().position(|v| !v.is_finite()) {
                    return Err(LsftsError::Data {
                        line,
                        message: format!("column {}: non-finite value", col + 1),
                    });
                }
                rows.push(values);
            }
        }
    }
    let points = header.ok_or(LsftsError::Data {
        line: 1,
        message: "missing grid header".into(),
    })?;
    let grid = Grid::from_points(&points).map_err(|e| LsftsError::Data {
        line: 1,
        message: e.to_string(),
    })?;
    FunctionalSeries::from_rows(&rows, grid).map_err(|e| LsftsError::Data {
        line: rows.len() + 1,
        message: e.to_string(),
    })
}

pub fn write_series(series: &FunctionalSeries, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref()).map_err(|e| LsftsError::Io(format!("{}: {e}", path.as_ref().display())))?;
    let mut w = BufWriter::new(file);
    write_series_to(series, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_series_to<W: Write + ?Sized>(series: &FunctionalSeries, w: &mut W) -> Result<()> {
    let rows: Vec<Vec<f64>> = (1..=series.len()).map(|t| series.curve(t)).collect();
    write_curves(w, series.grid(), &rows)
}

/// Curves on `grid` in the series layout (grid header, one curve per row).
pub fn write_curves<W: Write + ?Sized>(w: &mut W, grid: &Grid, rows: &[Vec<f64>]) -> Result<()> {
    let header: Vec<String> = grid.points().iter().map(|&s| format_number(s)).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Numeric table with a text header.
pub fn write_table<W: Write + ?Sized>(w: &mut W, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
