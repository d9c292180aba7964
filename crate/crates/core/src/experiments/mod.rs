//! Seeded, reproducible pipelines behind every reported number.
//!
//! An [`ExperimentConfig`] fully determines a run: [`run`] turns it into a
//! [`RunOutput`] of tables and summary values, and [`write_run`] stores the
//! tables as CSV (or JSON) next to a [`RunManifest`]. Ensemble members run
//! on the rayon pool and are gathered in member order, so outputs are
//! byte-identical across reruns and thread counts.

mod discrete;
mod flows;
mod oracles;
mod output;
mod sweeps;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::stats::log_space;
use crate::recurrence::{DEFAULT_BURN_IN, DEFAULT_GRID_STEP, DEFAULT_K, DEFAULT_WINDOW};
use crate::systems::{SystemKind, SystemSpec};

pub use discrete::{
    r_half_spread, run_cantor_zoom, run_discrete_ensemble, run_fat_cantor_zoom, run_henon,
    run_solenoid, snapshot_indices, tail_mean, CantorZoom, DiscreteEnsemble, FatCantorZoom,
    HenonRun, OracleCheck, SolenoidRun,
};
pub use flows::{
    run_flow_ensemble, run_flow_zoom, run_henon_heiles, run_lorenz63, run_lorenz96, FlowEnsemble,
    HENON_HEILES_INITIAL,
};
pub use oracles::{
    cantor_oracle_table, solenoid_curve, solenoid_kink_ratio, solenoid_slope, SolenoidCurve,
};
pub use output::{
    write_run, AnalyticRow, CantorOracleRow, EiRow, HistRow, IidRow, OracleRow, RunManifest,
    RunOutput, SnapshotRow, Table, ZoomRow,
};
pub use sweeps::{run_ei_sweep, run_iid_demo, EiSweep, IidDemo};

/// Which pipeline a config selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Zoom,
    Ensemble,
    EiSweep,
    IidDemo,
    SolenoidMeasure,
    CantorOracle,
}

/// Threshold policy for the extremal-index sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileMode {
    Fixed,
    /// `q = 1 − 1/√N` for a series of `N = t_l/Δt` samples.
    Varying,
}

impl QuantileMode {
    pub fn quantile(self, fixed: f64, n: usize) -> f64 {
        match self {
            QuantileMode::Fixed => fixed,
            QuantileMode::Varying => 1.0 - 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QuantileMode::Fixed => "fixed",
            QuantileMode::Varying => "varying",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Everything a run depends on. Fields missing from a JSON config take the
/// defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub system: String,
    /// Overrides of the system's registered parameters.
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub n_refs: usize,
    /// Orbit length per reference, maps.
    pub iters: u64,
    /// Integration time per reference, flows.
    pub total_time: f64,
    pub dt: f64,
    pub burn_in: u64,
    pub burn_in_time: f64,
    pub k: usize,
    pub b: f64,
    pub q: f64,
    pub q_modes: Vec<QuantileMode>,
    /// Sampling steps of the extremal-index sweep at fixed `t_len`.
    pub dt_grid: Vec<f64>,
    pub t_len: f64,
    /// Series lengths of the extremal-index sweep at fixed `dt_ref`.
    pub t_len_grid: Vec<f64>,
    pub dt_ref: f64,
    /// Largest integration step; coarser sampling steps are subdivided.
    pub max_step: f64,
    pub checkpoints: Option<usize>,
    /// Sample size: fat-Cantor points or length of the max-pair series.
    pub samples: Option<usize>,
    /// Reproduce the literal forward-filter-then-backward fat-Cantor recipe.
    pub faithful: bool,
    /// Temporal exclusion window for references taken on the orbit.
    pub window: u64,
    /// Also run the single-orbit variant (Hénon ensembles).
    pub orbit_variant: bool,
    /// Scale of the exponential max-pair process.
    pub lambda: f64,
    /// Branch depth of the semi-analytic solenoid measure.
    pub branch_depth: usize,
    /// Use the measure formula exactly as printed, without the square.
    pub printed_form: bool,
    pub log10_r_min: Option<f64>,
    pub log10_r_max: Option<f64>,
    pub n_radii: Option<usize>,
    pub grid_step: f64,
    pub hist_bins: usize,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

pub const DEFAULT_Q: f64 = 0.99;
pub const DEFAULT_N_REFS: usize = 200;
pub const DEFAULT_T_LEN: f64 = 1000.0;
pub const DEFAULT_DT_REF: f64 = 0.0198;
pub const DEFAULT_T_LEN_GRID: [f64; 5] = [250.0, 500.0, 1000.0, 2000.0, 4000.0];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::Zoom,
            system: "henon".into(),
            params: BTreeMap::new(),
            seed: 0,
            n_refs: DEFAULT_N_REFS,
            iters: 1_000_000,
            total_time: 1e5,
            dt: 0.01,
            burn_in: DEFAULT_BURN_IN,
            burn_in_time: 100.0,
            k: DEFAULT_K,
            b: 0.5,
            q: DEFAULT_Q,
            q_modes: vec![QuantileMode::Fixed, QuantileMode::Varying],
            dt_grid: log_space(0.002, 0.2, 8),
            t_len: DEFAULT_T_LEN,
            t_len_grid: DEFAULT_T_LEN_GRID.to_vec(),
            dt_ref: DEFAULT_DT_REF,
            max_step: 0.01,
            checkpoints: None,
            samples: None,
            faithful: false,
            window: DEFAULT_WINDOW,
            orbit_variant: true,
            lambda: 1.0,
            branch_depth: 30,
            printed_form: false,
            log10_r_min: None,
            log10_r_max: None,
            n_radii: None,
            grid_step: DEFAULT_GRID_STEP,
            hist_bins: 40,
            threads: None,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, v, "must be positive and finite"))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn spec(&self) -> Result<SystemSpec> {
        SystemSpec::lookup(&self.system)?.with_params(&self.params)
    }

    /// Rejects configurations that cannot run, before any work is done.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        if self.k < 2 {
            return Err(Error::param(
                "k",
                self.k as f64,
                "buffer needs at least 2 entries",
            ));
        }
        if self.n_refs == 0 {
            return Err(Error::param("n_refs", 0.0, "need at least one reference"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::param("q", self.q, "quantile must lie in (0, 1)"));
        }
        if !(self.b > 0.0 && self.b <= 1.0) {
            return Err(Error::param("b", self.b, "ratio scale must lie in (0, 1]"));
        }
        for (name, v) in [
            ("dt", self.dt),
            ("total_time", self.total_time),
            ("t_len", self.t_len),
            ("dt_ref", self.dt_ref),
            ("max_step", self.max_step),
            ("lambda", self.lambda),
            ("grid_step", self.grid_step),
        ] {
            positive(name, v)?;
        }
        if !(self.burn_in_time >= 0.0) {
            return Err(Error::param(
                "burn_in_time",
                self.burn_in_time,
                "must be non-negative",
            ));
        }
        for &v in self.dt_grid.iter().chain(&self.t_len_grid) {
            positive("grid value", v)?;
        }
        if self.q_modes.is_empty() {
            return Err(Error::InvalidInput(
                "q_modes must name at least one policy".into(),
            ));
        }
        if self.checkpoints == Some(0) {
            return Err(Error::param(
                "checkpoints",
                0.0,
                "need at least one checkpoint",
            ));
        }
        if self.samples == Some(0) || self.hist_bins == 0 || self.n_radii == Some(0) {
            return Err(Error::InvalidInput(
                "samples, hist_bins and n_radii must be positive".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::param("threads", 0.0, "need at least one thread"));
        }
        if let (Some(lo), Some(hi)) = (self.log10_r_min, self.log10_r_max) {
            if !(lo < hi) {
                return Err(Error::InvalidInput(format!(
                    "log10 r range [{lo}, {hi}] is empty"
                )));
            }
        }
        if self.system == "lorenz96" && spec.param("n")? > flows::MAX_LORENZ96_DIM as f64 {
            return Err(Error::param(
                "n",
                spec.param("n")?,
                format!("Lorenz 96 runs support n up to {}", flows::MAX_LORENZ96_DIM),
            ));
        }
        let flow = spec.kind == SystemKind::Flow;
        match self.experiment {
            Experiment::EiSweep if !flow => Err(Error::InvalidInput(format!(
                "ei-sweep needs a flow, `{}` is not one",
                self.system
            ))),
            Experiment::SolenoidMeasure if self.system != "solenoid" => Err(Error::InvalidInput(
                "solenoid-measure runs on the solenoid only".into(),
            )),
            Experiment::SolenoidMeasure if self.branch_depth == 0 || self.branch_depth > 30 => {
                Err(Error::param(
                    "branch_depth",
                    self.branch_depth as f64,
                    "must lie in 1..=30",
                ))
            }
            Experiment::CantorOracle if self.system != "cantor-shift" => Err(Error::InvalidInput(
                "cantor-oracle runs on the cantor-shift only".into(),
            )),
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON of every field that affects results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.threads = None;
        c.format = OutputFormat::Csv;
        let json = serde_json::to_vec(&c).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}

/// Runs the pipeline selected by `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Zoom => match cfg.system.as_str() {
            "henon" => Ok(run_henon(cfg, false)?.output(cfg)),
            "cantor-shift" => Ok(run_cantor_zoom(cfg)?.output(cfg)),
            "fat-cantor" => Ok(run_fat_cantor_zoom(cfg)?.output(cfg)),
            "solenoid" => discrete::run_solenoid_zoom(cfg),
            _ => run_flow_zoom(cfg),
        },
        Experiment::Ensemble => match cfg.system.as_str() {
            "henon" => Ok(run_henon(cfg, true)?.output(cfg)),
            "solenoid" => Ok(run_solenoid(cfg)?.output(cfg)),
            "cantor-shift" | "fat-cantor" => Ok(run_discrete_ensemble(cfg)?.output(cfg)),
            _ => Ok(run_flow_ensemble(cfg)?.output(cfg)),
        },
        Experiment::EiSweep => Ok(run_ei_sweep(cfg)?.output(cfg)),
        Experiment::IidDemo => Ok(run_iid_demo(cfg)?.output(cfg)),
        Experiment::SolenoidMeasure => oracles::run_solenoid_measure(cfg),
        Experiment::CantorOracle => oracles::run_cantor_oracle(cfg),
    }
}
