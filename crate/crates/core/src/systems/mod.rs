//! Dynamical systems behind a common stepping interface.
//!
//! Discrete systems implement [`DiscreteSystem`]: a state type that is
//! advanced by [`DiscreteSystem::step`] and an embedded point type that
//! carries the metric used for recurrence distances. Flows implement
//! [`VectorField`] and are advanced by the fixed-step integrator in
//! [`integrate`].

mod cantor;
mod flows;
mod henon;
pub mod integrate;
mod solenoid;

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cantor::{
    cantor_shift_step, escape_interval, fat_cantor_inverse, fat_cantor_sample, fat_cantor_step,
    CantorShift, FatCantor, FatCantorMode, FatCantorState, SymbolicState, DEFAULT_SYMBOL_DEPTH,
};
pub use flows::{
    flow_rhs, henon_heiles_energy, HarmonicOscillator, HenonHeiles, Lorenz63, Lorenz96, VectorField,
};
pub use henon::{henon_fixed_point, henon_step, Henon};
pub use integrate::{integrate, FlowSegment, SegmentStream};
pub use solenoid::{solenoid_embed, solenoid_step, Solenoid, SolenoidState};

/// Distance between embedded points.
pub trait Metric {
    fn distance(&self, other: &Self) -> f64;
}

impl<const D: usize> Metric for [f64; D] {
    #[inline]
    fn distance(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let d = self[i] - other[i];
            s += d * d;
        }
        s.sqrt()
    }
}

/// A discrete-time dynamical system.
pub trait DiscreteSystem: Sync {
    type State: Clone + Send + Sync + Debug;
    /// Point in the metric space where recurrences are measured.
    type Point: Copy + Send + Sync + Debug + Metric;

    fn step(&self, state: &Self::State) -> Result<Self::State>;
    fn embed(&self, state: &Self::State) -> Self::Point;
}

/// How a system is advanced in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Discrete,
    Flow,
    NonautonomousDiscrete,
}

/// Name, kind, parameters and dimension of a registered system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub kind: SystemKind,
    pub params: BTreeMap<String, f64>,
    pub dim: usize,
}

/// Registered system names, in registry order.
pub const SYSTEM_NAMES: [&str; 7] = [
    "henon",
    "cantor-shift",
    "fat-cantor",
    "solenoid",
    "lorenz63",
    "lorenz96",
    "henon-heiles",
];

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl SystemSpec {
    /// Default specification for a registered name.
    pub fn lookup(name: &str) -> Result<SystemSpec> {
        let (kind, p, dim) = match name {
            "henon" => (SystemKind::Discrete, params(&[("a", 1.4), ("b", 0.3)]), 2),
            "cantor-shift" => (
                SystemKind::Discrete,
                params(&[("depth", DEFAULT_SYMBOL_DEPTH as f64)]),
                1,
            ),
            "fat-cantor" => (
                SystemKind::NonautonomousDiscrete,
                params(&[("depth", 20.0)]),
                1,
            ),
            "solenoid" => (SystemKind::Discrete, params(&[("a", 0.076)]), 3),
            "lorenz63" => (
                SystemKind::Flow,
                params(&[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)]),
                3,
            ),
            "lorenz96" => (SystemKind::Flow, params(&[("n", 4.0), ("F", 32.0)]), 4),
            "henon-heiles" => (SystemKind::Flow, BTreeMap::new(), 4),
            other => return Err(Error::UnknownSystem(other.to_string())),
        };
        Ok(SystemSpec {
            name: name.to_string(),
            kind,
            params: p,
            dim,
        })
    }

    /// All registered systems with default parameters.
    pub fn registry() -> Vec<SystemSpec> {
        SYSTEM_NAMES
            .iter()
            .map(|n| SystemSpec::lookup(n).expect("registered name"))
            .collect()
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("{} has no parameter `{name}`", self.name)))
    }

    /// Overrides parameters, then validates the result.
    pub fn with_params(mut self, overrides: &BTreeMap<String, f64>) -> Result<SystemSpec> {
        for (k, v) in overrides {
            if !self.params.contains_key(k) {
                return Err(Error::InvalidInput(format!(
                    "{} has no parameter `{k}`",
                    self.name
                )));
            }
            self.params.insert(k.clone(), *v);
        }
        if self.name == "lorenz96" {
            self.dim = self.param("n")? as usize;
        }
        self.validate()?;
        Ok(self)
    }

    /// Checks parameters against the per-system admissible ranges.
    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.params {
            if !v.is_finite() {
                return Err(Error::param(k, *v, "must be finite"));
            }
        }
        match self.name.as_str() {
            "solenoid" => {
                let a = self.param("a")?;
                if !(a > 0.0 && a < 0.25) {
                    return Err(Error::param(
                        "a",
                        a,
                        "solenoid contraction must lie in (0, 1/4)",
                    ));
                }
            }
            "cantor-shift" => {
                let d = self.param("depth")?;
                if d < 1.0 || d.fract() != 0.0 {
                    return Err(Error::param("depth", d, "must be a positive integer"));
                }
            }
            "fat-cantor" => {
                let d = self.param("depth")?;
                if d < 1.0 || d.fract() != 0.0 {
                    return Err(Error::param("depth", d, "must be a positive integer"));
                }
            }
            "lorenz96" => {
                let n = self.param("n")?;
                if n < 4.0 || n.fract() != 0.0 {
                    return Err(Error::param("n", n, "needs an integer n >= 4"));
                }
            }
            "lorenz63" => {
                let b = self.param("beta")?;
                if b <= 0.0 {
                    return Err(Error::param("beta", b, "must be positive"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}
