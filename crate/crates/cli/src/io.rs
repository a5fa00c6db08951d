//! CSV and JSON readers and writers.
//!
//! A functional CSV has a header row of sampling points `t_1 < .. < t_p` and
//! one row of curve values per observation. A scalar CSV has a header of
//! column names and one numeric row per observation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use locsparse::{Curves, Dataset};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalCsv {
    pub grid: Vec<f64>,
    /// `n x p`.
    pub values: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTable {
    pub names: Vec<String>,
    /// `n x names.len()`.
    pub values: DMatrix<f64>,
}

impl ScalarTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Shortest decimal that reads back to the same `f64`; `NA` for non-finite values.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NA".to_string()
    }
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt)
}

fn parse_cell(path: &Path, row: usize, col: usize, s: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Input(format!("{}: row {row}, column {col}: {s:?} is not a finite number", path.display())))
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(f))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Rows of numbers below a header; every row must have the header's width.
fn read_numeric(path: &Path) -> CliResult<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::Input(format!("{}: missing header row", path.display())));
    }
    let width = header.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = r + 2;
        if rec.len() != width {
            return Err(CliError::Input(format!(
                "{}: row {line} has {} fields, expected {width}",
                path.display(),
                rec.len()
            )));
        }
        for (c, cell) in rec.iter().enumerate() {
            data.push(parse_cell(path, line, c + 1, cell)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok((header, DMatrix::from_row_slice(rows, width, &data)))
}

pub fn read_functional(path: &Path) -> CliResult<FunctionalCsv> {
    let (header, values) = read_numeric(path)?;
    let grid = header
        .iter()
        .enumerate()
        .map(|(c, h)| parse_cell(path, 1, c + 1, h))
        .collect::<CliResult<Vec<f64>>>()?;
    if grid.len() < 2 {
        return Err(CliError::Input(format!("{}: need at least two grid points", path.display())));
    }
    if let Some(c) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(CliError::Input(format!(
            "{}: grid is not strictly increasing at column {}",
            path.display(),
            c + 2
        )));
    }
    Ok(FunctionalCsv { grid, values })
}

pub fn read_scalars(path: &Path) -> CliResult<ScalarTable> {
    let (names, values) = read_numeric(path)?;
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() || names[..i].contains(n) {
            return Err(CliError::Input(format!("{}: empty or duplicate column name {n:?}", path.display())));
        }
    }
    Ok(ScalarTable { names, values })
}

fn writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(f)))
}

/// Writes a header and rows of preformatted cells.
pub fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    let map = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(map)?;
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>()).map_err(map)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_functional(path: &Path, data: &FunctionalCsv) -> CliResult<()> {
    let header: Vec<String> = data.grid.iter().map(|&t| fmt(t)).collect();
    write_rows(path, &header, data.values.row_iter().map(|r| r.iter().map(|&v| fmt(v)).collect::<Vec<_>>()))
}

pub fn write_scalars(path: &Path, table: &ScalarTable) -> CliResult<()> {
    write_rows(path, &table.names, table.values.row_iter().map(|r| r.iter().map(|&v| fmt(v)).collect::<Vec<_>>()))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> CliResult<D> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Affine map of a sampling grid onto `[0, 1]` with exact endpoints.
pub fn unit_grid(grid: &[f64]) -> Vec<f64> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let p = grid.len();
    grid.iter()
        .enumerate()
        .map(|(i, &t)| match i {
            0 => 0.0,
            _ if i == p - 1 => 1.0,
            _ => (t - lo) / (hi - lo),
        })
        .collect()
}

/// Curves, scalar covariates and (when present) the response of one data set.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub grid: Vec<f64>,
    pub curves: DMatrix<f64>,
    pub scalar_names: Vec<String>,
    pub z: DMatrix<f64>,
    pub y: Option<DVector<f64>>,
}

impl LoadedData {
    pub fn n(&self) -> usize {
        self.curves.nrows()
    }

    /// Dataset on the unit interval; a missing response is filled with zeros.
    pub fn dataset(&self) -> CliResult<Dataset<f64>> {
        let y = self.y.clone().unwrap_or_else(|| DVector::zeros(self.n()));
        Ok(Dataset::new(
            Curves::Sampled {
                grid: unit_grid(&self.grid),
                values: self.curves.clone(),
            },
            self.z.clone(),
            y,
        )?)
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            grid: self.grid.clone(),
            curves: self.curves.select_rows(rows),
            scalar_names: self.scalar_names.clone(),
            z: self.z.select_rows(rows),
            y: self.y.as_ref().map(|y| y.select_rows(rows)),
        }
    }
}

/// Joins a functional CSV with a scalar CSV. Every scalar column except the
/// response becomes a covariate, in file order.
pub fn load_data(curves: &Path, scalars: &Path, response: &str, require_response: bool) -> CliResult<LoadedData> {
    let f = read_functional(curves)?;
    let s = read_scalars(scalars)?;
    if f.values.nrows() != s.values.nrows() {
        return Err(CliError::Input(format!(
            "row count mismatch: {} has {} rows, {} has {}",
            curves.display(),
            f.values.nrows(),
            scalars.display(),
            s.values.nrows()
        )));
    }
    let resp = s.column(response);
    if require_response && resp.is_none() {
        return Err(CliError::Input(format!(
            "{}: no response column {response:?} (columns: {})",
            scalars.display(),
            s.names.join(", ")
        )));
    }
    let keep: Vec<usize> = (0..s.names.len()).filter(|&c| Some(c) != resp).collect();
    Ok(LoadedData {
        grid: f.grid,
        curves: f.values,
        scalar_names: keep.iter().map(|&c| s.names[c].clone()).collect(),
        z: s.values.select_columns(&keep),
        y: resp.map(|c| s.values.column(c).into_owned()),
    })
}

/// Values per record in the public Tecator text layout: 100 absorbances,
/// 22 principal components, then moisture, fat and protein.
pub const TECATOR_RECORD: usize = 125;
pub const TECATOR_CHANNELS: usize = 100;

/// Parses the Tecator text distribution: a free-text preamble followed by
/// whitespace-separated numbers, `TECATOR_RECORD` per sample.
pub fn parse_tecator(path: &Path, text: &str) -> CliResult<(FunctionalCsv, ScalarTable)> {
    let lines: Vec<&str> = text.lines().collect();
    let numeric = |l: &str| {
        let mut any = false;
        for tok in l.split_whitespace() {
            if tok.parse::<f64>().is_err() {
                return false;
            }
            any = true;
        }
        any || l.trim().is_empty()
    };
    // The data block is the longest numeric suffix of the file.
    let mut start = lines.len();
    while start > 0 && numeric(lines[start - 1]) {
        start -= 1;
    }
    let nums: Vec<f64> = lines[start..]
        .iter()
        .flat_map(|l| l.split_whitespace())
        .map(|t| t.parse::<f64>().expect("checked numeric"))
        .collect();
    if nums.is_empty() || nums.len() % TECATOR_RECORD != 0 {
        return Err(CliError::Input(format!(
            "{}: expected a multiple of {TECATOR_RECORD} numbers after the preamble, found {}",
            path.display(),
            nums.len()
        )));
    }
    let n = nums.len() / TECATOR_RECORD;
    let grid: Vec<f64> = (0..TECATOR_CHANNELS)
        .map(|j| 850.0 + 200.0 * j as f64 / (TECATOR_CHANNELS - 1) as f64)
        .collect();
    let values = DMatrix::from_fn(n, TECATOR_CHANNELS, |i, j| nums[i * TECATOR_RECORD + j]);
    let scalars = DMatrix::from_fn(n, 3, |i, c| nums[i * TECATOR_RECORD + TECATOR_RECORD - 3 + c]);
    Ok((
        FunctionalCsv { grid, values },
        ScalarTable {
            names: vec!["moisture".into(), "fat".into(), "protein".into()],
            values: scalars,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_endpoints() {
        let g = unit_grid(&[850.0, 900.0, 1050.0]);
        assert_eq!(g, vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt(0.1), "0.1");
        assert_eq!(fmt(f64::NAN), "NA");
        assert_eq!(fmt_opt(None), "NA");
        let x = 1.0 / 3.0;
        assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn tecator_layout() {
        let mut text = String::from("Tecator data\nsome description 1990\n\n");
        for i in 0..2 {
            for line in 0..25 {
                let row: Vec<String> = (0..5).map(|c| format!("{}", i * 1000 + line * 5 + c)).collect();
                text.push_str(&row.join(" "));
                text.push('\n');
            }
        }
        let (f, s) = parse_tecator(Path::new("t"), &text).unwrap();
        assert_eq!(f.values.shape(), (2, 100));
        assert_eq!(f.values[(1, 0)], 1000.0);
        assert_eq!(s.values[(1, 1)], 1123.0);
        assert_eq!(f.grid[0], 850.0);
        assert!((f.grid[99] - 1050.0).abs() < 1e-12);
        assert!(parse_tecator(Path::new("t"), "header\n1 2 3\n").is_err());
    }
}
