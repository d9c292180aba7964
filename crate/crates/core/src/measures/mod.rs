//! Exact and semi-analytic invariant-measure oracles.

mod cantor;
mod solenoid;

use serde::{Deserialize, Serialize};

pub use cantor::{cantor_ball_measure, cantor_ratio, cantor_ternary, CantorPoint};
pub use solenoid::{
    branch_point, closest_branch, solenoid_ball_measure, solenoid_branch_points,
    solenoid_dimension, MeasureForm, SolenoidQuery, MAX_BRANCH_DEPTH,
};

/// How a ball measure was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureMethod {
    ExactCantor,
    SolenoidApprox,
    EmpiricalCount,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub mu: f64,
    pub method: MeasureMethod,
}
