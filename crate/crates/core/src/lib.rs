//! Exceedance-based (peaks-over-threshold) local dimension estimation for
//! dynamical systems, together with the diagnostics that reveal when it
//! fails: the regular-variation ratio `R(r)` tracked across shrinking balls,
//! exact invariant-measure oracles for the Cantor shift and the solenoid, a
//! correlation-sum estimator, and the extremal-index discretisation sweeps.
//!
//! The crate is organised by concern:
//!
//! - [`systems`]: maps, symbolic shifts and flows behind one stepping
//!   interface, plus a fixed-step RK4 integrator with Hermite dense output.
//! - [`measures`]: exact and semi-analytic ball-measure oracles.
//! - [`recurrence`]: the shrinking-ball engine (top-k recurrence tracking,
//!   ball transits for flows, zoom traces and ensembles).
//! - [`estimators`]: exponential excess fit, ratio, correlation sum,
//!   Süveges extremal index and the synthetic max-pair process.
//! - [`experiments`]: seeded, reproducible pipelines writing CSV + manifests.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod measures;
pub mod recurrence;
pub mod rng;
pub mod systems;

pub use error::{Error, Result};
