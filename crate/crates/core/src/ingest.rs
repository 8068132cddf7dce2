//! Labeled measurement data: loading, writing and column selection.
//!
//! Input files are delimited text with an optional header row. The delimiter
//! is detected from the first non-empty line (comma, semicolon or tab) and then
//! fixed for the whole file. One column holds the 0/1 label, an optional column
//! holds non-negative integer object ids, and every other column is a
//! measurement.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An `m x n` matrix of finite measurements with one binary label and one
/// unique id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    m: usize,
    n: usize,
    labels: Vec<bool>,
    ids: Vec<u64>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major values. `column_names` may be empty, in
    /// which case `c0..c{n-1}` are used.
    pub fn new(
        values: Vec<f64>,
        n: usize,
        labels: Vec<bool>,
        ids: Vec<u64>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let m = labels.len();
        if values.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                found: values.len(),
            });
        }
        if ids.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: ids.len(),
            });
        }
        let bad: Vec<usize> = (0..m)
            .filter(|&i| values[i * n..(i + 1) * n].iter().any(|v| !v.is_finite()))
            .collect();
        if !bad.is_empty() {
            return Err(Error::NonNumericRows { rows: bad });
        }
        let mut seen = HashSet::with_capacity(m);
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateId(id));
            }
        }
        let column_names = if column_names.is_empty() {
            default_names(n)
        } else if column_names.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: column_names.len(),
            });
        } else {
            column_names
        };
        Ok(Dataset {
            values,
            m,
            n,
            labels,
            ids,
            column_names,
        })
    }

    /// Convenience constructor with ids `0..m` and default column names.
    pub fn from_rows(rows: &[Vec<f64>], labels: &[bool]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let values = rows.iter().flatten().copied().collect();
        let ids = (0..labels.len() as u64).collect();
        Dataset::new(values, n, labels.to_vec(), ids, Vec::new())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        (0..self.m).map(move |i| self.row(i))
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Number of positive objects, `|D¹|`.
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Same shape, labels and ids with a new value matrix.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Dataset {
        debug_assert_eq!(values.len(), self.values.len());
        Dataset {
            values,
            ..self.clone()
        }
    }

    /// Replaces the label vector (e.g. relabeling by defect class).
    pub fn with_labels(&self, labels: Vec<bool>) -> Result<Dataset> {
        if labels.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: labels.len(),
            });
        }
        Ok(Dataset {
            labels,
            ..self.clone()
        })
    }

    /// Writes the dataset as CSV with header `id,<columns...>,label`.
    /// Floats use the shortest representation that parses back to the same bits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "id")?;
        for name in &self.column_names {
            write!(w, ",{name}")?;
        }
        writeln!(w, ",label")?;
        for i in 0..self.m {
            write!(w, "{}", self.ids[i])?;
            for v in self.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", u8::from(self.labels[i]))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("c{j}")).collect()
}

/// Reference to a column by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.trim().to_string()),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Name(s) => f.write_str(s),
            ColumnRef::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Detects the field delimiter from the first non-empty line.
pub fn detect_delimiter(text: &str) -> u8 {
    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut best = (b',', line.matches(',').count());
    for d in *b";\t" {
        let c = line.matches(d as char).count();
        if c > best.1 {
            best = (d, c);
        }
    }
    best.0
}

fn resolve(col: &ColumnRef, header: Option<&[String]>, width: usize) -> Result<usize> {
    match col {
        ColumnRef::Index(i) if *i < width => Ok(*i),
        ColumnRef::Index(i) => Err(Error::IndexOutOfRange {
            index: *i,
            n: width,
        }),
        ColumnRef::Name(name) => header
            .and_then(|h| h.iter().position(|n| n == name))
            .ok_or_else(|| Error::UnknownColumn(name.clone())),
    }
}

fn parse_label(s: &str, row: usize) -> Result<bool> {
    match s.trim().parse::<f64>() {
        Ok(0.0) => Ok(false),
        Ok(1.0) => Ok(true),
        _ => Err(Error::LabelNotBinary {
            row,
            value: s.to_string(),
        }),
    }
}

/// Parses delimited text. Row numbers in errors are 1-based file line numbers.
pub fn parse_csv(text: &str, label: &ColumnRef, id: Option<&ColumnRef>) -> Result<Dataset> {
    let delimiter = detect_delimiter(text);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: k + 1,
            col: 0,
            msg: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        records.push((line, rec));
    }
    let Some((_, first)) = records.first() else {
        return Err(Error::EmptyDataset);
    };
    let width = first.len();
    let has_header = first.iter().any(|c| c.parse::<f64>().is_err());
    let header: Option<Vec<String>> = has_header.then(|| first.iter().map(String::from).collect());
    let body = if has_header {
        &records[1..]
    } else {
        &records[..]
    };

    let label_col = resolve(label, header.as_deref(), width)?;
    let id_col = id
        .map(|c| resolve(c, header.as_deref(), width))
        .transpose()?;
    if id_col == Some(label_col) {
        return Err(Error::Config("label and id columns coincide".into()));
    }
    let measure_cols: Vec<usize> = (0..width)
        .filter(|&j| j != label_col && Some(j) != id_col)
        .collect();
    let n = measure_cols.len();

    let mut values = Vec::with_capacity(body.len() * n);
    let mut labels = Vec::with_capacity(body.len());
    let mut ids = Vec::with_capacity(body.len());
    let mut bad_rows = Vec::new();
    for (idx, (line, rec)) in body.iter().enumerate() {
        if rec.len() != width {
            return Err(Error::Parse {
                row: *line,
                col: rec.len(),
                msg: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        labels.push(parse_label(&rec[label_col], *line)?);
        ids.push(match id_col {
            Some(c) => rec[c].parse::<u64>().map_err(|_| Error::Parse {
                row: *line,
                col: c,
                msg: format!("id {:?} is not a non-negative integer", &rec[c]),
            })?,
            None => idx as u64,
        });
        let mut row_ok = true;
        for &j in &measure_cols {
            match rec[j].parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    row_ok = false;
                    values.push(0.0);
                }
            }
        }
        if !row_ok {
            bad_rows.push(*line);
        }
    }
    if !bad_rows.is_empty() {
        return Err(Error::NonNumericRows { rows: bad_rows });
    }
    let names = match &header {
        Some(h) => measure_cols.iter().map(|&j| h[j].clone()).collect(),
        None => Vec::new(),
    };
    Dataset::new(values, n, labels, ids, names)
}

pub fn load_csv(
    path: impl AsRef<Path>,
    label: &ColumnRef,
    id: Option<&ColumnRef>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, label, id)
}

/// Which measurement columns to keep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelection {
    All,
    /// Inclusive range `first..=last`.
    Range {
        first: usize,
        last: usize,
    },
    List(Vec<usize>),
}

impl ColumnSelection {
    pub fn indices(&self, n: usize) -> Result<Vec<usize>> {
        let idx: Vec<usize> = match self {
            ColumnSelection::All => (0..n).collect(),
            ColumnSelection::Range { first, last } => {
                if first > last {
                    return Err(Error::Config(format!("empty column range {first}..{last}")));
                }
                (*first..=*last).collect()
            }
            ColumnSelection::List(v) => v.clone(),
        };
        if let Some(&bad) = idx.iter().find(|&&j| j >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        Ok(idx)
    }
}

impl FromStr for ColumnSelection {
    type Err = Error;

    /// `all`, `a..b` (inclusive) or a comma separated list of indices.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(ColumnSelection::All);
        }
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad column index {t:?} in {s:?}")))
        };
        if let Some((a, b)) = s.split_once("..") {
            return Ok(ColumnSelection::Range {
                first: num(a)?,
                last: num(b.trim_start_matches('='))?,
            });
        }
        Ok(ColumnSelection::List(
            s.split(',').map(num).collect::<Result<_>>()?,
        ))
    }
}

pub fn select_columns(d: &Dataset, sel: &ColumnSelection) -> Result<Dataset> {
    if *sel == ColumnSelection::All {
        return Ok(d.clone());
    }
    let idx = sel.indices(d.n)?;
    Ok(project(d, &idx))
}

/// Keeps the given (validated) columns in the given order.
pub(crate) fn project(d: &Dataset, idx: &[usize]) -> Dataset {
    let mut values = Vec::with_capacity(d.m * idx.len());
    for row in d.rows() {
        values.extend(idx.iter().map(|&j| row[j]));
    }
    Dataset {
        values,
        m: d.m,
        n: idx.len(),
        labels: d.labels.clone(),
        ids: d.ids.clone(),
        column_names: idx.iter().map(|&j| d.column_names[j].clone()).collect(),
    }
}
