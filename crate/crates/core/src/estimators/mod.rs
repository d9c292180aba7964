//! Local-dimension, regular-variation and extremal-index estimators.

pub(crate) mod correlation;
mod ebd;
mod extremal;
pub mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use correlation::{correlation_dimension, correlation_sum, default_eps_grid};
pub use ebd::{
    ebd_fit, excesses_at_radius, excesses_from_buffer, regular_variation_ratio, ExcessSample,
    MIN_EXCESSES,
};
pub use extremal::{
    mean_cluster_time, suveges_theta, synthetic_max_pair, ExceedanceIndexSeries, MaxPairSeries,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Ebd,
    Correlation,
    ExtremalIndex,
    ClusterTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub value: f64,
    pub kind: EstimateKind,
    pub n: usize,
    pub params: BTreeMap<String, f64>,
    pub stderr: Option<f64>,
    /// Set when the estimate came from a fallback path (no qualifying fit
    /// window, clamped extremal index).
    pub flagged: bool,
}

impl EstimateRecord {
    fn new(kind: EstimateKind, value: f64, n: usize) -> Self {
        EstimateRecord {
            value,
            kind,
            n,
            params: BTreeMap::new(),
            stderr: None,
            flagged: false,
        }
    }

    fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}
