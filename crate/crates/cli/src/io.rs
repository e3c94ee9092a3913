//! CSV formats.
//!
//! Every file has a header row. Counts use `f0,f1,...` and plain decimal
//! integers; real-valued tables (rates, embeddings, manifold coordinates) use
//! the shortest decimal form that reads back to the same `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use psne_core::synthetic::LabeledDataset;
use psne_core::{CountMatrix, Matrix};

use crate::error::{CliError, Result};

pub const COUNTS_FILE: &str = "counts.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const RATES_FILE: &str = "rates.csv";
pub const MANIFOLD_FILE: &str = "manifold.csv";

/// Header cells and data rows (with their 1-based line numbers) of a CSV file.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<(u64, Vec<String>)>,
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    CliError::Parse { path: path.to_path_buf(), line, column: 0, message: e.to_string() }
}

/// Splits CSV bytes into a header and rows. `path` is only used in messages.
pub fn parse_raw(bytes: &[u8], path: &Path) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(bytes);
    let headers: Vec<String> = reader.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_owned).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::format(path, "file is empty or has no header row"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let cells: Vec<String> = record.iter().map(str::to_owned).collect();
        if cells.len() != headers.len() {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line,
                column: cells.len().min(headers.len()) + 1,
                message: format!("expected {} fields, found {}", headers.len(), cells.len()),
            });
        }
        rows.push((line, cells));
    }
    Ok(RawTable { headers, rows })
}

pub fn read_raw(path: &Path) -> Result<RawTable> {
    parse_raw(&read_bytes(path)?, path)
}

fn parse_cells<T>(table: &RawTable, path: &Path, expected: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(table.rows.len() * table.headers.len());
    for (line, cells) in &table.rows {
        for (j, cell) in cells.iter().enumerate() {
            match parse(cell) {
                Some(v) => out.push(v),
                None => {
                    return Err(CliError::Parse {
                        path: path.to_path_buf(),
                        line: *line,
                        column: j + 1,
                        message: format!("expected {expected} in column `{}`, found {cell:?}", table.headers[j]),
                    })
                }
            }
        }
    }
    Ok(out)
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn count_header(n_features: usize) -> Vec<String> {
    (0..n_features).map(|m| format!("f{m}")).collect()
}

pub fn dim_header(n_dims: usize) -> Vec<String> {
    (0..n_dims).map(|p| format!("dim_{p}")).collect()
}

/// Parses a counts CSV. The header must read `f0,f1,...`.
pub fn parse_counts(bytes: &[u8], path: &Path) -> Result<CountMatrix> {
    let table = parse_raw(bytes, path)?;
    if table.headers != count_header(table.headers.len()) {
        return Err(CliError::format(path, "counts header must be f0,f1,..."));
    }
    let values = parse_cells(&table, path, "a non-negative integer", |c| c.parse::<u64>().ok())?;
    CountMatrix::new(table.rows.len(), table.headers.len(), values).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn read_counts(path: &Path) -> Result<CountMatrix> {
    parse_counts(&read_bytes(path)?, path)
}

/// Parses a real-valued table with any header.
pub fn parse_matrix(bytes: &[u8], path: &Path) -> Result<(Vec<String>, Matrix)> {
    let table = parse_raw(bytes, path)?;
    let values = parse_cells(&table, path, "a finite number", parse_finite)?;
    let matrix = Matrix::from_vec(table.rows.len(), table.headers.len(), values)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    Ok((table.headers, matrix))
}

pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Matrix)> {
    parse_matrix(&read_bytes(path)?, path)
}

fn column_index(table: &RawTable, path: &Path, name: Option<&str>) -> Result<usize> {
    match name {
        Some(name) => table
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::format(path, format!("no column named `{name}`"))),
        None if table.headers.len() == 1 => Ok(0),
        None => Err(CliError::format(path, "file has several columns; name the one to use")),
    }
}

fn read_column<T>(
    path: &Path,
    name: Option<&str>,
    expected: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>> {
    let table = read_raw(path)?;
    let j = column_index(&table, path, name)?;
    let single = RawTable {
        headers: vec![table.headers[j].clone()],
        rows: table.rows.into_iter().map(|(line, cells)| (line, vec![cells[j].clone()])).collect(),
    };
    parse_cells(&single, path, expected, parse)
}

/// Reads integer class labels. `column` defaults to the only column.
pub fn read_labels(path: &Path, column: Option<&str>) -> Result<Vec<usize>> {
    read_column(path, column, "a non-negative integer label", |c| c.parse::<usize>().ok())
}

/// Reads a real-valued column, such as `t` from a manifold file.
pub fn read_values(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    read_column(path, column, "a finite number", parse_finite)
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Vec<u8> {
    writer.into_inner().expect("writing to memory cannot fail")
}

fn new_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn counts_csv(counts: &CountMatrix) -> Vec<u8> {
    let mut w = new_writer();
    w.write_record(count_header(counts.n_features())).expect("in-memory write");
    for n in 0..counts.n_samples() {
        w.write_record(counts.row(n).iter().map(u64::to_string)).expect("in-memory write");
    }
    finish(w)
}

pub fn matrix_csv(headers: &[String], m: &Matrix) -> Vec<u8> {
    assert_eq!(headers.len(), m.cols(), "one header per column");
    let mut w = new_writer();
    w.write_record(headers).expect("in-memory write");
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|&v| fmt_real(v))).expect("in-memory write");
    }
    finish(w)
}

pub fn embedding_csv(x: &Matrix) -> Vec<u8> {
    matrix_csv(&dim_header(x.cols()), x)
}

pub fn labels_csv(labels: &[usize]) -> Vec<u8> {
    let mut w = new_writer();
    w.write_record(["label"]).expect("in-memory write");
    for l in labels {
        w.write_record([l.to_string()]).expect("in-memory write");
    }
    finish(w)
}

pub fn manifold_csv(t: &[f64], h: &[f64]) -> Vec<u8> {
    let mut w = new_writer();
    w.write_record(["t", "h"]).expect("in-memory write");
    for (a, b) in t.iter().zip(h) {
        w.write_record([fmt_real(*a), fmt_real(*b)]).expect("in-memory write");
    }
    finish(w)
}

pub fn trace_csv(trace: &[(usize, f64)]) -> Vec<u8> {
    let mut w = new_writer();
    w.write_record(["iteration", "cost"]).expect("in-memory write");
    for (k, c) in trace {
        w.write_record([k.to_string(), fmt_real(*c)]).expect("in-memory write");
    }
    finish(w)
}

/// Paths of the four files written for a generated dataset.
#[derive(Debug, Clone)]
pub struct DatasetFiles {
    pub counts: PathBuf,
    pub labels: PathBuf,
    pub rates: PathBuf,
    pub manifold: PathBuf,
}

impl DatasetFiles {
    pub fn in_dir(dir: &Path) -> Self {
        DatasetFiles {
            counts: dir.join(COUNTS_FILE),
            labels: dir.join(LABELS_FILE),
            rates: dir.join(RATES_FILE),
            manifold: dir.join(MANIFOLD_FILE),
        }
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_dataset(dir: &Path, data: &LabeledDataset) -> Result<DatasetFiles> {
    create_dir(dir)?;
    let files = DatasetFiles::in_dir(dir);
    write_bytes(&files.counts, &counts_csv(&data.counts))?;
    write_bytes(&files.labels, &labels_csv(&data.group))?;
    write_bytes(&files.rates, &matrix_csv(&count_header(data.rates.cols()), &data.rates))?;
    write_bytes(&files.manifold, &manifold_csv(&data.manifold_t, &data.manifold_h))?;
    Ok(files)
}

/// Contents of a dataset directory, as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetContents {
    pub counts: CountMatrix,
    pub rates: Matrix,
    pub labels: Vec<usize>,
    pub manifold_t: Vec<f64>,
    pub manifold_h: Vec<f64>,
}

pub fn read_dataset(dir: &Path) -> Result<DatasetContents> {
    let files = DatasetFiles::in_dir(dir);
    let counts = read_counts(&files.counts)?;
    let (_, rates) = read_matrix(&files.rates)?;
    let labels = read_labels(&files.labels, None)?;
    let manifold_t = read_values(&files.manifold, Some("t"))?;
    let manifold_h = read_values(&files.manifold, Some("h"))?;
    check_rows(&files.counts, counts.n_samples(), &files.labels, labels.len())?;
    check_rows(&files.counts, counts.n_samples(), &files.rates, rates.rows())?;
    check_rows(&files.counts, counts.n_samples(), &files.manifold, manifold_t.len())?;
    Ok(DatasetContents { counts, rates, labels, manifold_t, manifold_h })
}

/// Fails with an alignment error when two files have different row counts.
pub fn check_rows(left: &Path, left_rows: usize, right: &Path, right_rows: usize) -> Result<()> {
    if left_rows != right_rows {
        return Err(CliError::Alignment {
            left: left.to_path_buf(),
            left_rows,
            right: right.to_path_buf(),
            right_rows,
        });
    }
    Ok(())
}
