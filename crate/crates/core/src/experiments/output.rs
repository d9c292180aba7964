//! Row schemas, encoded tables and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, OutputFormat};
use crate::error::{Error, Result};
use crate::recurrence::ZoomTrace;
use crate::rng::RNG_ALGORITHM;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoomRow {
    pub point_id: usize,
    pub checkpoint: usize,
    pub iters: u64,
    pub r: f64,
    #[serde(rename = "R_half")]
    pub r_half: f64,
    pub ebd_dim: f64,
    pub corr_dim: f64,
}

impl ZoomRow {
    /// Rows of one trace; `dim_offset` is added to both dimensions.
    pub fn from_trace(point_id: usize, t: &ZoomTrace, dim_offset: f64) -> Vec<ZoomRow> {
        t.checkpoints
            .iter()
            .enumerate()
            .map(|(i, c)| ZoomRow {
                point_id,
                checkpoint: i,
                iters: c.iters,
                r: c.r,
                r_half: c.r_half,
                ebd_dim: c.ebd_dim + dim_offset,
                corr_dim: c.corr_dim + dim_offset,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EiRow {
    pub dt: f64,
    pub t_len: f64,
    pub q_mode: String,
    pub q: f64,
    pub theta_mean: f64,
    pub theta_std: f64,
    pub tc_mean: f64,
    pub tc_std: f64,
    pub n_refs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
    /// Fitted exponential density at the bin centre.
    pub fit_density: f64,
}

/// One point of a ball drawn at a snapshot radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub snapshot: usize,
    pub checkpoint: usize,
    pub r: f64,
    pub distance: f64,
    pub x: f64,
    pub y: f64,
}

/// Semi-analytic ball measure and ratio at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub log10_r: f64,
    pub mu: f64,
    #[serde(rename = "R_half")]
    pub r_half: f64,
}

/// Empirical against exact ball measure at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub checkpoint: usize,
    pub r: f64,
    pub mu_empirical: f64,
    pub mu_exact: f64,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorOracleRow {
    pub r: f64,
    pub mu: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IidRow {
    pub series: String,
    pub excess_rate: f64,
    pub excess_stderr: f64,
    pub n_excess: usize,
    pub theta: f64,
    pub theta_flagged: bool,
}

/// A named table, encoded once in both output formats.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub rows: usize,
    csv: Vec<u8>,
    json: Vec<u8>,
}

impl Table {
    pub fn new<T: Serialize>(name: &str, rows: &[T]) -> Result<Table> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        let mut json = serde_json::to_vec_pretty(rows)?;
        json.push(b'\n');
        Ok(Table {
            name: name.to_string(),
            rows: rows.len(),
            csv,
            json,
        })
    }

    pub fn bytes(&self, format: OutputFormat) -> &[u8] {
        match format {
            OutputFormat::Csv => &self.csv,
            OutputFormat::Json => &self.json,
        }
    }

    pub fn csv_text(&self) -> &str {
        std::str::from_utf8(&self.csv).expect("csv output is UTF-8")
    }
}

/// Tables and headline numbers of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub(crate) fn push<T: Serialize>(&mut self, name: &str, rows: &[T]) {
        self.tables
            .push(Table::new(name, rows).expect("in-memory encoding cannot fail"));
    }

    pub(crate) fn set(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub started: String,
    pub finished: String,
    pub version: String,
    pub rng: String,
    /// File name to SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes every table of `out` into `dir` in `cfg.format`, followed by
/// `manifest.json`. `started` is the wall-clock start of the run.
pub fn write_run(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &RunOutput,
    started: chrono::DateTime<chrono::Utc>,
) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut outputs = BTreeMap::new();
    for t in &out.tables {
        let name = format!("{}.{}", t.name, cfg.format.extension());
        let bytes = t.bytes(cfg.format);
        fs::write(dir.join(&name), bytes)?;
        outputs.insert(name, hex::encode(Sha256::digest(bytes)));
    }
    let manifest = RunManifest {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        rng: RNG_ALGORITHM.to_string(),
        outputs,
        summary: out.summary.clone(),
        notes: out.notes.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    fs::write(dir.join(MANIFEST_NAME), json)?;
    Ok(manifest)
}
