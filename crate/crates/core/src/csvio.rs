//! CSV exchange with external evaluators.
//!
//! Dialect: UTF-8, comma separated, `.` decimal point, one header row. Design
//! files use the header `x1,...,xm` optionally followed by `y`. Numbers are
//! written in the shortest form that parses back to the identical `f64`.
//!
//! Row numbers in errors are 1-based file line numbers (the header is line 1);
//! column numbers are 1-based.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::design::{DesignSpace, SampleSet};
use crate::error::{Error, Result};

/// Shortest round-trip decimal form of `v`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_owned()
    } else {
        v.to_string()
    }
}

/// Header-checked numeric table.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptySet(path.to_path_buf()));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: line,
                column: record.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: line,
                column: j + 1,
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: j + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptySet(path.to_path_buf()));
    }
    Ok(Table { header, rows })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            row,
            column: 0,
            message: format!("{kind:?}"),
        },
    }
}

fn expect_header(path: &Path, header: &[String], expected: &[String]) -> Result<()> {
    if header != expected {
        return Err(Error::Shape(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            expected.join(","),
            header.join(",")
        )));
    }
    Ok(())
}

fn design_header(m: usize, with_y: bool) -> Vec<String> {
    let mut h: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    if with_y {
        h.push("y".into());
    }
    h
}

/// Read raw samples with responses and check every row against `bounds`.
pub fn ingest_csv(path: &Path, bounds: &DesignSpace) -> Result<SampleSet> {
    let table = read_table(path)?;
    let m = bounds.dim();
    if table.header.len() != m + 1 {
        return Err(Error::Shape(format!(
            "{}: {} columns but the bounds describe {m} variables plus y",
            path.display(),
            table.header.len()
        )));
    }
    expect_header(path, &table.header, &design_header(m, true))?;
    let bad: Vec<usize> = table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !bounds.contains(&r[..m]))
        .map(|(i, _)| i + 2)
        .collect();
    if !bad.is_empty() {
        return Err(Error::RowsOutOfBounds {
            path: path.to_path_buf(),
            rows: bad,
        });
    }
    let k = table.rows.len();
    let x = DMatrix::from_fn(k, m, |r, c| table.rows[r][c]);
    let y = DVector::from_fn(k, |r, _| table.rows[r][m]);
    SampleSet::new(x, Some(y))
}

/// Write `samples` in the design dialect; the `y` column is present only when the set has responses.
pub fn emit_design_csv(samples: &SampleSet, path: &Path) -> Result<()> {
    let m = samples.dim();
    let header = design_header(m, samples.y().is_some());
    let rows = (0..samples.len()).map(|r| {
        let mut row: Vec<f64> = samples.point(r);
        if let Some(y) = samples.y() {
            row.push(y[r]);
        }
        row
    });
    write_table(path, &header, rows)
}

fn write_table(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reduced coordinates (`xr1[,xr2...]`) with their responses.
pub fn write_reduced_csv(path: &Path, reduced: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if reduced.nrows() != y.len() {
        return Err(Error::Shape(format!("{} reduced rows but {} responses", reduced.nrows(), y.len())));
    }
    let mut header: Vec<String> = (1..=reduced.ncols()).map(|i| format!("xr{i}")).collect();
    header.push("y".into());
    let rows = (0..y.len()).map(|r| {
        let mut row: Vec<f64> = reduced.row(r).iter().copied().collect();
        row.push(y[r]);
        row
    });
    write_table(path, &header, rows)
}

pub fn read_reduced_csv(path: &Path) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let table = read_table(path)?;
    let n = table.header.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::Shape(format!("{}: need at least one reduced column and y", path.display())));
    }
    let mut expected: Vec<String> = (1..=n).map(|i| format!("xr{i}")).collect();
    expected.push("y".into());
    expect_header(path, &table.header, &expected)?;
    let k = table.rows.len();
    let reduced = DMatrix::from_fn(k, n, |r, c| table.rows[r][c]);
    let y = table.rows.iter().map(|r| r[n]).collect();
    Ok((reduced, y))
}

/// Eigenvalue spectrum with cumulative explained fractions (`index,eigenvalue,explained`).
pub fn write_eigen_csv(path: &Path, eigenvalues: &[f64], explained: &[f64]) -> Result<()> {
    if eigenvalues.len() != explained.len() {
        return Err(Error::Shape("eigenvalue and explained lengths differ".into()));
    }
    let header = ["index", "eigenvalue", "explained"].map(String::from);
    let rows = eigenvalues
        .iter()
        .zip(explained)
        .enumerate()
        .map(|(i, (l, e))| vec![(i + 1) as f64, *l, *e]);
    write_table(path, &header, rows)
}

/// Eigenvalues from an `eigen_decay.csv` file, in file order.
pub fn read_eigen_csv(path: &Path) -> Result<Vec<f64>> {
    let table = read_table(path)?;
    let expected = ["index", "eigenvalue", "explained"].map(String::from);
    expect_header(path, &table.header, &expected)?;
    Ok(table.rows.iter().map(|r| r[1]).collect())
}

/// Variable bounds as a two-row table (`lower`, `upper`) under an `x1,...,xm` header.
pub fn read_bounds_csv(path: &Path) -> Result<DesignSpace> {
    let table = read_table(path)?;
    let m = table.header.len();
    expect_header(path, &table.header, &design_header(m, false))?;
    if table.rows.len() != 2 {
        return Err(Error::Shape(format!(
            "{}: bounds file needs exactly two rows (lower, upper), found {}",
            path.display(),
            table.rows.len()
        )));
    }
    DesignSpace::new(table.rows[0].clone(), table.rows[1].clone())
}
