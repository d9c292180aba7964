use super::DiscreteSystem;
use crate::error::{Error, Result};

/// `(1 - a x₁² + x₂, b x₁)`; a non-finite image means the orbit escaped.
pub fn henon_step(s: [f64; 2], a: f64, b: f64) -> Result<[f64; 2]> {
    let out = [1.0 - a * s[0] * s[0] + s[1], b * s[0]];
    if out[0].is_finite() && out[1].is_finite() {
        Ok(out)
    } else {
        Err(Error::Escaped { step: 0 })
    }
}

/// The fixed point on the attractor side, `x* = ((b-1) + sqrt((b-1)² + 4a)) / 2a`.
pub fn henon_fixed_point(a: f64, b: f64) -> [f64; 2] {
    let x = ((b - 1.0) + ((b - 1.0).powi(2) + 4.0 * a).sqrt()) / (2.0 * a);
    [x, b * x]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Henon {
    pub a: f64,
    pub b: f64,
}

impl Default for Henon {
    fn default() -> Self {
        Henon { a: 1.4, b: 0.3 }
    }
}

impl DiscreteSystem for Henon {
    type State = [f64; 2];
    type Point = [f64; 2];

    #[inline]
    fn step(&self, s: &[f64; 2]) -> Result<[f64; 2]> {
        henon_step(*s, self.a, self.b)
    }

    #[inline]
    fn embed(&self, s: &[f64; 2]) -> [f64; 2] {
        *s
    }
}
