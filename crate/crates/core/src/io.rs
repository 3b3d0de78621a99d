//! CSV and JSON input/output.
//!
//! Numbers are written with `f64`'s `Display`, which is locale-independent
//! and round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraclap::SpaceGrid1D;
use crate::kernels::{KernelSpec, TimeGrid};
use crate::timestepper::{DiscreteSolution, Field};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path)(source),
        other => parse_err(path, format!("{other:?}")),
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Reads a numeric CSV with exactly `columns` fields per row.
///
/// A first row that does not parse as numbers is taken as a header.
pub fn read_table(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => {
                if values.len() != columns {
                    return Err(parse_err(
                        path,
                        format!("row {} has {} columns, expected {columns}", i + 1, values.len()),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(parse_err(path, format!("row {} has a non-finite value", i + 1)));
                }
                rows.push(values);
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(parse_err(path, format!("row {}: {e}", i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(parse_err(path, "no data rows"));
    }
    Ok(rows)
}

/// Two-column `(t, value)` table as a [`KernelSpec::Tabulated`].
pub fn read_tabulated_kernel(path: &Path) -> Result<KernelSpec> {
    let rows = read_table(path, 2)?;
    let (times, values) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
    KernelSpec::tabulated(times, values).map_err(|e| parse_err(path, e.to_string()))
}

/// Two-column `(x, value)` profile, interpolated linearly onto the grid
/// nodes and taken as zero outside the tabulated range.
pub fn read_profile(path: &Path, grid: &SpaceGrid1D) -> Result<Vec<f64>> {
    let rows = read_table(path, 2)?;
    if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(parse_err(path, "x column must be strictly increasing"));
    }
    Ok(grid
        .nodes()
        .into_iter()
        .map(|x| {
            let j = rows.partition_point(|r| r[0] <= x);
            if j == 0 {
                if x == rows[0][0] { rows[0][1] } else { 0.0 }
            } else if j == rows.len() {
                if x == rows[j - 1][0] { rows[j - 1][1] } else { 0.0 }
            } else {
                let (l, r) = (&rows[j - 1], &rows[j]);
                l[1] + (r[1] - l[1]) * (x - l[0]) / (r[0] - l[0])
            }
        })
        .collect())
}

/// Long-format solution table: header `t,x,u`, then one row per
/// time node and interior space node, time-major.
pub fn write_solution<W: Write>(sol: &DiscreteSolution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(["t", "x", "u"]).map_err(wrap)?;
    let xs = sol.grid.nodes();
    for (i, row) in sol.u.iter().enumerate() {
        let t = sol.time.time(i).to_string();
        for (x, u) in xs.iter().zip(row) {
            w.write_record([t.as_str(), &x.to_string(), &u.to_string()]).map_err(wrap)?;
        }
    }
    w.flush().map_err(|e| Error::Internal(e.to_string()))
}

/// Reads a table written by [`write_solution`] and checks it lies on the given grids.
pub fn read_solution(path: &Path, time: &TimeGrid, grid: &SpaceGrid1D) -> Result<Field> {
    let rows = read_table(path, 3)?;
    let (nt, nx) = (time.steps + 1, grid.n);
    if rows.len() != nt * nx {
        return Err(Error::Usage(format!(
            "grid mismatch: {} has {} rows, expected {nt} time nodes x {nx} space nodes",
            path.display(),
            rows.len()
        )));
    }
    let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-9 * scale;
    let xs = grid.nodes();
    let xscale = grid.b - grid.a;
    let mut field = vec![vec![0.0; nx]; nt];
    for (idx, r) in rows.iter().enumerate() {
        let (i, j) = (idx / nx, idx % nx);
        if !close(r[0], time.time(i), time.horizon) || !close(r[1], xs[j], xscale) {
            return Err(Error::Usage(format!(
                "grid mismatch at row {}: (t, x) = ({}, {}), expected ({}, {})",
                idx + 1,
                r[0],
                r[1],
                time.time(i),
                xs[j]
            )));
        }
        field[i][j] = r[2];
    }
    Ok(field)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Writes a header and rows of numbers.
pub fn write_columns<W: Write>(out: W, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row.iter().map(f64::to_string)).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let with = dir.path().join("a.csv");
        let without = dir.path().join("b.csv");
        std::fs::write(&with, "t,value\n0.5,1\n1,2\n").unwrap();
        std::fs::write(&without, "0.5,1\n1,2\n").unwrap();
        assert_eq!(read_table(&with, 2).unwrap(), read_table(&without, 2).unwrap());
    }

    #[test]
    fn bad_rows_are_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "0.5,1\n1,x\n").unwrap();
        assert!(matches!(read_table(&p, 2), Err(Error::Parse { .. })));
        std::fs::write(&p, "0.5,1,3\n").unwrap();
        assert!(matches!(read_table(&p, 2), Err(Error::Parse { .. })));
        std::fs::write(&p, "1,1\n0.5,2\n").unwrap();
        assert!(matches!(read_tabulated_kernel(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn profile_interpolates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u0.csv");
        std::fs::write(&p, "x,u\n-0.5,0\n0,1\n0.5,0\n").unwrap();
        let grid = SpaceGrid1D::new(-1.0, 1.0, 7).unwrap();
        let u = read_profile(&p, &grid).unwrap();
        let expected = [0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0];
        for (a, b) in u.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
