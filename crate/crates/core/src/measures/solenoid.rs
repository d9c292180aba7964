//! Section-disk approximation of the solenoid's invariant measure.
//!
//! Backward angles from a section angle `φ_k` fan out into `2^k` branches
//! `Γ = (a_1, …, a_k)`; each branch lands on one forward disk point `v_k^Γ`.
//! A ball of radius `r` around the centre branch `Γ*` meets the attractor
//! in `2^k` chords, one per branch, whose lengths give the measure.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{MeasureMethod, MeasureValue};
use crate::error::{Error, Result};

/// Largest depth `solenoid_branch_points` will enumerate.
pub const MAX_BRANCH_DEPTH: usize = 30;

const LUMP_TOLERANCE: f64 = 1e-10;

/// Chord-length form of each branch's contribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureForm {
    /// `√(r² − d²)`, the half-chord of a radius-`r` disk at centre distance `d`.
    #[default]
    Squared,
    /// `√(r² − d)`, the expression exactly as typeset.
    Printed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolenoidQuery {
    pub k: usize,
    pub a: f64,
    pub phi_k: f64,
    /// `gamma_star[i - 1]` is the digit `a_i`.
    pub gamma_star: Vec<bool>,
    pub v0: [f64; 2],
    pub r: f64,
    #[serde(default)]
    pub form: MeasureForm,
}

impl SolenoidQuery {
    pub fn new(k: usize, a: f64, phi_k: f64, gamma_star: Vec<bool>, r: f64) -> Result<Self> {
        let q = SolenoidQuery {
            k,
            a,
            phi_k,
            gamma_star,
            v0: [0.0, 0.0],
            r,
            form: MeasureForm::Squared,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_radius(&self, r: f64) -> Self {
        SolenoidQuery { r, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k", 0.0, "branch depth must be positive"));
        }
        if !(self.a > 0.0 && self.a < 0.25) {
            return Err(Error::param(
                "a",
                self.a,
                "solenoid contraction must lie in (0, 1/4)",
            ));
        }
        if !self.phi_k.is_finite() {
            return Err(Error::param(
                "phi_k",
                self.phi_k,
                "section angle must be finite",
            ));
        }
        if self.gamma_star.len() != self.k {
            return Err(Error::InvalidInput(format!(
                "centre branch has {} digits, expected k = {}",
                self.gamma_star.len(),
                self.k
            )));
        }
        let norm = self.v0[0].hypot(self.v0[1]);
        if !(norm <= 1.0) {
            return Err(Error::param(
                "v0",
                norm,
                "initial point must lie in the unit disk",
            ));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::param(
                "r",
                self.r,
                "radius must be positive and finite",
            ));
        }
        Ok(())
    }
}

fn unit(phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c, s]
}

fn section_angle(phi: f64) -> f64 {
    phi.rem_euclid(TAU)
}

/// Disk points `v_k^Γ` for every branch, indexed so that bit `i - 1` of the
/// index is `a_i`.
pub fn solenoid_branch_points(q: &SolenoidQuery) -> Result<Vec<[f64; 2]>> {
    q.validate()?;
    if q.k > MAX_BRANCH_DEPTH {
        return Err(Error::param(
            "k",
            q.k as f64,
            format!("enumeration is limited to k ≤ {MAX_BRANCH_DEPTH}"),
        ));
    }
    let k = q.k;
    let scale = q.a.powi(k as i32);
    let mut out = Vec::with_capacity(1 << k);
    let mut angles = vec![0.0; k + 1];
    for gamma in 0..(1usize << k) {
        angles[k] = section_angle(q.phi_k);
        for i in (1..=k).rev() {
            let bit = (gamma >> (i - 1)) & 1;
            angles[i - 1] = angles[i] / 2.0 + bit as f64 * PI;
        }
        let mut v = [scale * q.v0[0], scale * q.v0[1]];
        for i in 1..=k {
            let w = q.a.powi((k - i) as i32) / 2.0;
            let u = unit(angles[i - 1]);
            v[0] += w * u[0];
            v[1] += w * u[1];
        }
        out.push(v);
    }
    Ok(out)
}

/// Disk point of a single branch.
pub fn branch_point(k: usize, a: f64, phi_k: f64, gamma: &[bool], v0: [f64; 2]) -> [f64; 2] {
    let mut phi = section_angle(phi_k);
    let mut v = [0.0; 2];
    let mut w = 0.5;
    for i in (1..=k).rev() {
        phi = phi / 2.0 + if gamma[i - 1] { PI } else { 0.0 };
        let u = unit(phi);
        v[0] += w * u[0];
        v[1] += w * u[1];
        w *= a;
    }
    let scale = a.powi(k as i32);
    [v[0] + scale * v0[0], v[1] + scale * v0[1]]
}

/// Greedy choice of the branch whose disk point is closest to `target`.
///
/// Digits are fixed from `a_k` (weight 1/2) down to `a_1` (weight
/// `a^{k-1}/2`). Exact for targets on the attractor when `a < 1/4`.
pub fn closest_branch(k: usize, a: f64, phi_k: f64, target: [f64; 2]) -> Vec<bool> {
    let mut gamma = vec![false; k];
    let mut phi = section_angle(phi_k);
    let mut partial = [0.0; 2];
    let mut w = 0.5;
    for i in (1..=k).rev() {
        let mut best = (f64::INFINITY, false, phi, partial);
        for bit in [false, true] {
            let child = phi / 2.0 + if bit { PI } else { 0.0 };
            let u = unit(child);
            let p = [partial[0] + w * u[0], partial[1] + w * u[1]];
            let d = (p[0] - target[0]).hypot(p[1] - target[1]);
            if d < best.0 {
                best = (d, bit, child, p);
            }
        }
        gamma[i - 1] = best.1;
        phi = best.2;
        partial = best.3;
        w *= a;
    }
    gamma
}

struct Walk<'a> {
    q: &'a SolenoidQuery,
    cutoff: f64,
    /// `tail[i]` bounds the displacement still to come after fixing `a_i`.
    tail: Vec<f64>,
    /// Branch weights `a^{k-i}/2` indexed by `i`.
    weight: Vec<f64>,
    sum: f64,
}

impl Walk<'_> {
    fn term(&self, d: f64) -> f64 {
        let r = self.q.r;
        match self.q.form {
            MeasureForm::Squared => (r * r - d * d).max(0.0).sqrt(),
            MeasureForm::Printed => (r * r - d).max(0.0).sqrt(),
        }
    }

    /// Visit the subtree below a node where `a_k … a_{i+1}` are fixed.
    ///
    /// `phi`/`star` are `φ_i` on this branch and on `Γ*`, `delta` their
    /// difference tracked without cancellation, `p` the accumulated
    /// displacement `v^Γ − v^{Γ*}`.
    fn visit(&mut self, i: usize, phi: f64, star: f64, delta: f64, p: [f64; 2]) {
        let dist = p[0].hypot(p[1]);
        let rest = if i == 0 { 0.0 } else { self.tail[i + 1] };
        if dist - rest >= self.cutoff {
            return;
        }
        if i == 0 || rest <= LUMP_TOLERANCE * self.cutoff {
            self.sum += 2f64.powi(i as i32) * self.term(dist);
            return;
        }
        let star_bit = self.q.gamma_star[i - 1];
        let star_child = star / 2.0 + if star_bit { PI } else { 0.0 };
        let w = self.weight[i];
        for bit in [false, true] {
            let child = phi / 2.0 + if bit { PI } else { 0.0 };
            let shift = match (bit, star_bit) {
                (true, false) => PI,
                (false, true) => -PI,
                _ => 0.0,
            };
            let d = delta / 2.0 + shift;
            // φ̄(A) − φ̄(B) = 2 sin((A−B)/2) (−sin((A+B)/2), cos((A+B)/2))
            let (sm, cm) = ((child + star_child) / 2.0).sin_cos();
            let amp = 2.0 * (d / 2.0).sin() * w;
            let np = [p[0] - amp * sm, p[1] + amp * cm];
            self.visit(i - 1, child, star_child, d, np);
        }
    }
}

/// `μ(B_r) ≈ (1/(2^k π)) Σ_Γ √(r² − d_Γ²)` with `d_Γ = ‖v_k^{Γ*} − v_k^Γ‖`.
///
/// Subtrees whose every descendant lies outside the ball are pruned, and
/// subtrees whose remaining spread is negligible against `r` are summed as
/// one chord times their branch count.
pub fn solenoid_ball_measure(q: &SolenoidQuery) -> Result<MeasureValue> {
    q.validate()?;
    let k = q.k;
    let weight: Vec<f64> = (0..=k)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                q.a.powi((k - i) as i32) / 2.0
            }
        })
        .collect();
    // tail[i] = Σ_{j<i} 2 weight[j] ≤ a^{k-i+1}/(1-a)
    let mut tail = vec![0.0; k + 2];
    for i in 1..=k + 1 {
        tail[i] = tail[i - 1] + if i >= 2 { 2.0 * weight[i - 1] } else { 0.0 };
    }
    let cutoff = match q.form {
        MeasureForm::Squared => q.r,
        MeasureForm::Printed => q.r * q.r,
    };
    let mut walk = Walk {
        q,
        cutoff,
        tail,
        weight,
        sum: 0.0,
    };
    let phi = section_angle(q.phi_k);
    walk.visit(k, phi, phi, 0.0, [0.0, 0.0]);
    let mu = walk.sum / (2f64.powi(k as i32) * PI);
    Ok(MeasureValue {
        mu: mu.min(1.0),
        method: MeasureMethod::SolenoidApprox,
    })
}

/// Hausdorff dimension `1 − log 2 / log a` of the solenoid attractor.
pub fn solenoid_dimension(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::param("a", a, "contraction must lie in (0, 1)"));
    }
    Ok(1.0 - 2f64.ln() / a.ln())
}
