//! CSV tables and JSON manifests.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use weakmeas_core::sampler::ChainRecord;

use crate::run::PointSummary;

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create_dir(path: &Path) -> Result<(), IoError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Writes a header and string rows.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub const CHAIN_HEADER: [&str; 6] = [
    "sweep_index",
    "m_c",
    "wilson_line",
    "mean_plaquette",
    "acceptance_rate",
    "mean_s",
];

pub fn write_chain(path: &Path, record: &ChainRecord) -> Result<(), IoError> {
    let rows: Vec<Vec<String>> = (0..record.len())
        .map(|i| {
            vec![
                (record.first_sweep + i).to_string(),
                fmt_f64(record.m_c[i]),
                fmt_f64(record.wilson_line[i]),
                fmt_f64(record.mean_plaquette[i]),
                fmt_f64(record.acceptance[i]),
                fmt_f64(record.mean_s[i]),
            ]
        })
        .collect();
    write_table(path, &CHAIN_HEADER, &rows)
}

pub const AGGREGATE_HEADER: [&str; 18] = [
    "t_a",
    "L",
    "q",
    "q_err",
    "mean_s",
    "mean_plaquette",
    "wilson_line",
    "acceptance",
    "t_b",
    "mean_s_err",
    "mean_plaquette_err",
    "wilson_line_err",
    "m_c",
    "m_c_err",
    "max_discarded",
    "max_bond_dim",
    "exact_sweeps",
    "chains",
];

pub fn aggregate_row(l: usize, chains: usize, s: &PointSummary) -> Vec<String> {
    vec![
        fmt_f64(s.t_a),
        l.to_string(),
        fmt_f64(s.q.mean),
        fmt_f64(s.q.stderr),
        fmt_f64(s.mean_s.mean),
        fmt_f64(s.mean_plaquette.mean),
        fmt_f64(s.wilson_line.mean),
        fmt_f64(s.acceptance),
        fmt_f64(s.t_b),
        fmt_f64(s.mean_s.stderr),
        fmt_f64(s.mean_plaquette.stderr),
        fmt_f64(s.wilson_line.stderr),
        fmt_f64(s.m_c.mean),
        fmt_f64(s.m_c.stderr),
        fmt_f64(s.max_discarded),
        s.max_bond_dim.to_string(),
        s.exact_sweeps.to_string(),
        chains.to_string(),
    ]
}

/// One `(t_A, L, q, q_err)` row of an aggregated table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateRow {
    pub t_a: f64,
    pub l: usize,
    pub q: f64,
    pub q_err: f64,
}

/// Reads the columns needed for a collapse from an aggregated table.
pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::Format {
                path: path.to_path_buf(),
                message: format!("missing column {name:?}"),
            })
    };
    let (ct, cl, cq, ce) = (col("t_a")?, col("L")?, col("q")?, col("q_err")?);
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |what: &str| IoError::Format {
            path: path.to_path_buf(),
            message: format!("row {}: bad {what}", line + 1),
        };
        let num = |c: usize, what: &str| {
            rec.get(c)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(what))
        };
        rows.push(AggregateRow {
            t_a: num(ct, "t_a")?,
            l: rec
                .get(cl)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad("L"))?,
            q: num(cq, "q")?,
            q_err: num(ce, "q_err")?,
        });
    }
    Ok(rows)
}

/// Pretty JSON with keys in sorted order (serde_json's default map).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let json_err = |source| IoError::Json {
        path: path.to_path_buf(),
        source,
    };
    let value = serde_json::to_value(value).map_err(json_err)?;
    let mut text = serde_json::to_string_pretty(&value).map_err(json_err)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Provenance written next to every artifact set.
#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct Manifest<C> {
    pub command: String,
    pub version: String,
    pub threads: usize,
    /// How chain generators derive from the seed.
    pub rng: String,
    pub config: C,
    pub artifacts: Vec<String>,
}

pub const RNG_SCHEME: &str =
    "ChaCha8Rng::seed_from_u64(seed), set_stream(point_index * chains + chain)";

impl<C> Manifest<C> {
    pub fn new(command: &str, threads: usize, config: C) -> Self {
        Manifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            threads,
            rng: RNG_SCHEME.into(),
            config,
            artifacts: Vec::new(),
        }
    }
}
