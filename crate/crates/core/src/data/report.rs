//! Experiment reports: a canonical CSV table and a JSON sidecar.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::io::DatasetSummary;
use crate::error::{Error, Result};
use crate::solver::ConvergenceTrace;

pub const SCHEMA_VERSION: u32 = 1;

pub const HEADER: [&str; 14] = [
    "dataset",
    "variant",
    "lambda",
    "theta",
    "mu",
    "labeled_ratio",
    "n_features",
    "seed",
    "AP",
    "MaF",
    "RL",
    "OE",
    "iterations",
    "runtime_ms",
];

/// A per-seed row or the mean over seeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeedKey {
    Seed(u64),
    Mean,
}

impl fmt::Display for SeedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedKey::Seed(s) => write!(f, "{s}"),
            SeedKey::Mean => f.write_str("mean"),
        }
    }
}

impl std::str::FromStr for SeedKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mean" {
            return Ok(SeedKey::Mean);
        }
        s.parse()
            .map(SeedKey::Seed)
            .map_err(|_| Error::Argument(format!("seed '{s}' is neither an integer nor 'mean'")))
    }
}

impl Serialize for SeedKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SeedKey::Seed(s) => serializer.serialize_u64(*s),
            SeedKey::Mean => serializer.serialize_str("mean"),
        }
    }
}

impl<'de> Deserialize<'de> for SeedKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Seed(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Seed(s) => Ok(SeedKey::Seed(s)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub variant: String,
    pub lambda: f64,
    pub theta: f64,
    pub mu: f64,
    pub labeled_ratio: f64,
    pub n_features: usize,
    pub seed: SeedKey,
    pub ap: f64,
    pub maf: f64,
    pub rl: f64,
    pub oe: f64,
    /// Outer iterations of the fit (a mean on mean rows).
    pub iterations: f64,
    pub runtime_ms: Option<f64>,
}

impl ReportRow {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.dataset
            .cmp(&other.dataset)
            .then_with(|| self.variant.cmp(&other.variant))
            .then_with(|| self.lambda.total_cmp(&other.lambda))
            .then_with(|| self.theta.total_cmp(&other.theta))
            .then_with(|| self.mu.total_cmp(&other.mu))
            .then_with(|| self.labeled_ratio.total_cmp(&other.labeled_ratio))
            .then_with(|| self.n_features.cmp(&other.n_features))
            .then_with(|| self.seed.cmp(&other.seed))
    }

    /// Key order, then the value columns, so duplicate keys still sort
    /// deterministically.
    fn total_cmp(&self, other: &Self) -> Ordering {
        let values = |r: &Self| [r.ap, r.maf, r.rl, r.oe, r.iterations, r.runtime_ms.unwrap_or(f64::NAN)];
        values(self)
            .iter()
            .zip(values(other).iter())
            .fold(self.key_cmp(other), |acc, (a, b)| acc.then_with(|| a.total_cmp(b)))
    }

    fn group_key(&self) -> (String, String, [u64; 4], usize) {
        (
            self.dataset.clone(),
            self.variant.clone(),
            [
                self.lambda.to_bits(),
                self.theta.to_bits(),
                self.mu.to_bits(),
                self.labeled_ratio.to_bits(),
            ],
            self.n_features,
        )
    }
}

/// Canonical order: every key column, seeds before the mean row.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(ReportRow::total_cmp);
}

/// One mean row per group of per-seed rows sharing all other key columns.
/// `runtime_ms` is averaged only when every member has one.
pub fn mean_rows(rows: &[ReportRow]) -> Vec<ReportRow> {
    let mut groups: BTreeMap<_, Vec<&ReportRow>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.seed != SeedKey::Mean) {
        groups.entry(row.group_key()).or_default().push(row);
    }
    let mut out: Vec<ReportRow> = groups
        .into_values()
        .map(|members| {
            let k = members.len() as f64;
            let mean = |f: fn(&ReportRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / k;
            let runtime = members
                .iter()
                .map(|r| r.runtime_ms)
                .sum::<Option<f64>>()
                .map(|total| total / k);
            ReportRow {
                seed: SeedKey::Mean,
                ap: mean(|r| r.ap),
                maf: mean(|r| r.maf),
                rl: mean(|r| r.rl),
                oe: mean(|r| r.oe),
                iterations: mean(|r| r.iterations),
                runtime_ms: runtime,
                ..members[0].clone()
            }
        })
        .collect();
    sort_rows(&mut out);
    out
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            path: path.display().to_string(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes rows in canonical order. `runtime_ms` is left empty unless
/// `include_runtime` is set, so repeated runs produce identical bytes.
pub fn write_report(rows: &[ReportRow], path: &Path, include_runtime: bool) -> Result<()> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer.write_record(HEADER).map_err(|e| csv_err(path, e))?;
    for r in &sorted {
        let runtime = match (include_runtime, r.runtime_ms) {
            (true, Some(ms)) => ms.to_string(),
            _ => String::new(),
        };
        writer
            .write_record([
                r.dataset.clone(),
                r.variant.clone(),
                r.lambda.to_string(),
                r.theta.to_string(),
                r.mu.to_string(),
                r.labeled_ratio.to_string(),
                r.n_features.to_string(),
                r.seed.to_string(),
                r.ap.to_string(),
                r.maf.to_string(),
                r.rl.to_string(),
                r.oe.to_string(),
                r.iterations.to_string(),
                runtime,
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "unexpected report header".into(),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |col: &str| Error::Parse {
            path: path.display().to_string(),
            line,
            message: format!("column {col} does not parse"),
        };
        let num = |j: usize| record[j].parse::<f64>().map_err(|_| bad(HEADER[j]));
        rows.push(ReportRow {
            dataset: record[0].to_owned(),
            variant: record[1].to_owned(),
            lambda: num(2)?,
            theta: num(3)?,
            mu: num(4)?,
            labeled_ratio: num(5)?,
            n_features: record[6].parse().map_err(|_| bad(HEADER[6]))?,
            seed: record[7].parse().map_err(|_| bad(HEADER[7]))?,
            ap: num(8)?,
            maf: num(9)?,
            rl: num(10)?,
            oe: num(11)?,
            iterations: num(12)?,
            runtime_ms: if record[13].is_empty() { None } else { Some(num(13)?) },
        });
    }
    Ok(rows)
}

/// Everything recorded about one fit (one cell of the grid before the
/// feature-count expansion).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub variant: String,
    pub lambda: f64,
    pub theta: f64,
    pub mu: f64,
    pub labeled_ratio: f64,
    pub seed: u64,
    /// Indices of the labeled (training) instances.
    pub labeled: Vec<usize>,
    /// Full feature ranking, best first.
    pub ranking: Vec<usize>,
    pub trace: Option<ConvergenceTrace>,
    pub runtime_ms: f64,
    /// Set when the cell failed; the other fields then describe the cell only.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSidecar {
    pub schema: u32,
    pub config: serde_json::Value,
    pub dataset: Option<DatasetSummary>,
    pub fits: Vec<FitRecord>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}
