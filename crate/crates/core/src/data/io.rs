//! Dataset files.
//!
//! `dense_csv`: a header row, then one instance per row. Feature columns come
//! first; every column whose header starts with `label:` is a label column and
//! all of them must follow the features.
//!
//! `sparse_multilabel`: a first line `n d c`, then one line per instance of
//! the form `l1,l2 i:v i:v ...` with 0-based label and feature indices. An
//! instance without labels starts with whitespace.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dataset;

pub const LABEL_PREFIX: &str = "label:";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    DenseCsv,
    SparseMultilabel,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense_csv" | "csv" => Ok(DataFormat::DenseCsv),
            "sparse_multilabel" | "sparse" => Ok(DataFormat::SparseMultilabel),
            other => Err(Error::Argument(format!("unknown format '{other}'"))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::DenseCsv => "dense_csv",
            DataFormat::SparseMultilabel => "sparse_multilabel",
        })
    }
}

/// Shape and label statistics printed after loading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub instances: usize,
    pub features: usize,
    pub labels: usize,
    pub cardinality: f64,
    pub density: f64,
    pub standardized: bool,
}

impl DatasetSummary {
    pub fn of(data: &Dataset, standardized: bool) -> Self {
        DatasetSummary {
            instances: data.n_instances(),
            features: data.n_features(),
            labels: data.n_labels(),
            cardinality: data.label_cardinality(),
            density: data.label_density(),
            standardized,
        }
    }
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} instances, {} features, {} labels, cardinality {:.4}, density {:.4}",
            self.instances, self.features, self.labels, self.cardinality, self.density
        )
    }
}

#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub summary: DatasetSummary,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
}

/// Z-score each feature row with the population standard deviation. Rows
/// with zero spread are only centered.
pub fn standardize(x: &mut DMatrix<f64>) {
    let n = x.ncols() as f64;
    for mut row in x.row_iter_mut() {
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        for v in row.iter_mut() {
            *v -= mean;
            if sd > 0.0 {
                *v /= sd;
            }
        }
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn shape_error(path: &Path, err: Error) -> Error {
    match err {
        Error::Config(message) => parse_error(path, 0, message),
        other => other,
    }
}

pub fn load_dataset(path: &Path, format: DataFormat, standardize_features: bool) -> Result<LoadedDataset> {
    let (mut features, labels, feature_names, label_names) = match format {
        DataFormat::DenseCsv => read_dense(path)?,
        DataFormat::SparseMultilabel => read_sparse(path)?,
    };
    if standardize_features {
        standardize(&mut features);
    }
    let dataset = Dataset::fully_labeled(features, labels).map_err(|e| shape_error(path, e))?;
    let summary = DatasetSummary::of(&dataset, standardize_features);
    Ok(LoadedDataset {
        dataset,
        summary,
        feature_names,
        label_names,
    })
}

type Parsed = (DMatrix<f64>, DMatrix<f64>, Vec<String>, Vec<String>);

fn read_dense(path: &Path) -> Result<Parsed> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::new(file));
    let csv_error = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            kind => parse_error(path, line, format!("{kind:?}")),
        }
    };
    let header = reader.headers().map_err(csv_error)?.clone();
    let split = header.iter().position(|h| h.starts_with(LABEL_PREFIX)).unwrap_or(header.len());
    if let Some(j) = header.iter().skip(split).position(|h| !h.starts_with(LABEL_PREFIX)) {
        return Err(parse_error(
            path,
            1,
            format!("feature column '{}' follows the label columns", &header[split + j]),
        ));
    }
    let feature_names: Vec<String> = header.iter().take(split).map(str::to_owned).collect();
    let label_names: Vec<String> = header
        .iter()
        .skip(split)
        .map(|h| h[LABEL_PREFIX.len()..].to_owned())
        .collect();
    let (d, c) = (feature_names.len(), label_names.len());
    if d == 0 || c == 0 {
        return Err(parse_error(path, 1, format!("header declares {d} features and {c} labels")));
    }

    let mut feats = Vec::new();
    let mut labs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != d + c {
            return Err(parse_error(path, line, format!("expected {} fields, found {}", d + c, record.len())));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_error(path, line, format!("field {} ('{field}') is not a number", j + 1)))?;
            if j < d {
                if !v.is_finite() {
                    return Err(parse_error(path, line, format!("feature '{}' is not finite", feature_names[j])));
                }
                feats.push(v);
            } else {
                if v != 0.0 && v != 1.0 {
                    return Err(parse_error(
                        path,
                        line,
                        format!("label '{}' has non-binary value {field}", label_names[j - d]),
                    ));
                }
                labs.push(v);
            }
        }
    }
    let n = feats.len() / d;
    // rows were read instance by instance
    let features = DMatrix::from_column_slice(d, n, &feats);
    let labels = DMatrix::from_row_slice(n, c, &labs);
    Ok((features, labels, feature_names, label_names))
}

fn read_sparse(path: &Path) -> Result<Parsed> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "empty file"))?
        .map_err(|e| Error::io(path, e))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_error(path, 1, format!("header '{header}' is not 'n d c'")))?;
    let [n, d, c] = dims[..] else {
        return Err(parse_error(path, 1, format!("header '{header}' is not 'n d c'")));
    };
    let mut features = DMatrix::zeros(d, n);
    let mut labels = DMatrix::zeros(n, c);
    let mut i = 0;
    for (offset, text) in lines.enumerate() {
        let line = offset + 2;
        let text = text.map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() && i >= n {
            continue;
        }
        if i >= n {
            return Err(parse_error(path, line, format!("more than the declared {n} instances")));
        }
        let mut tokens = text.split_whitespace().peekable();
        let starts_with_labels = !text.starts_with(char::is_whitespace) && tokens.peek().is_some_and(|t| !t.contains(':'));
        if starts_with_labels {
            let list = tokens.next().expect("peeked");
            for tok in list.split(',').filter(|t| !t.is_empty()) {
                let j: usize = tok
                    .parse()
                    .map_err(|_| parse_error(path, line, format!("label index '{tok}' is not an integer")))?;
                if j >= c {
                    return Err(parse_error(path, line, format!("label index {j} out of range (c = {c})")));
                }
                labels[(i, j)] = 1.0;
            }
        }
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(path, line, format!("expected index:value, found '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(path, line, format!("feature index '{idx}' is not an integer")))?;
            if idx >= d {
                return Err(parse_error(path, line, format!("feature index {idx} out of range (d = {d})")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_error(path, line, format!("feature value '{val}' is not a number")))?;
            if !val.is_finite() {
                return Err(parse_error(path, line, format!("feature value '{val}' is not finite")));
            }
            features[(idx, i)] = val;
        }
        i += 1;
    }
    if i != n {
        return Err(parse_error(path, i + 2, format!("expected {n} instances, found {i}")));
    }
    let feature_names = (0..d).map(|j| format!("f{j}")).collect();
    let label_names = (0..c).map(|j| j.to_string()).collect();
    Ok((features, labels, feature_names, label_names))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes all features and ground-truth labels; the labeled mask is not
/// stored. Floats use the shortest representation that parses back exactly.
pub fn write_dense_csv(path: &Path, data: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => parse_error(path, 0, format!("{kind:?}")),
    };
    let (d, c) = (data.n_features(), data.n_labels());
    let header: Vec<String> = (0..d)
        .map(|j| format!("f{j}"))
        .chain((0..c).map(|j| format!("{LABEL_PREFIX}{j}")))
        .collect();
    writer.write_record(&header).map_err(to_err)?;
    let (x, y) = (data.features(), data.labels());
    for i in 0..data.n_instances() {
        let record: Vec<String> = x
            .column(i)
            .iter()
            .map(|v| v.to_string())
            .chain(y.row(i).iter().map(|v| format!("{}", *v as u8)))
            .collect();
        writer.write_record(&record).map_err(to_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Zero features are omitted.
pub fn write_sparse(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{} {} {}", data.n_instances(), data.n_features(), data.n_labels()).map_err(io)?;
    let (x, y) = (data.features(), data.labels());
    for i in 0..data.n_instances() {
        let labels: Vec<String> = (0..data.n_labels())
            .filter(|&j| y[(i, j)] > 0.5)
            .map(|j| j.to_string())
            .collect();
        let feats: Vec<String> = x
            .column(i)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| format!("{j}:{v}"))
            .collect();
        writeln!(out, "{} {}", labels.join(","), feats.join(" ")).map_err(io)?;
    }
    out.flush().map_err(io)
}
