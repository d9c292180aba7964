use std::f64::consts::TAU;

use super::DiscreteSystem;
use crate::error::{Error, Result};

/// Angle on the circle and point in the unit disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolenoidState {
    pub phi: f64,
    pub v: [f64; 2],
}

/// `(2φ mod 2π, a v + φ̄/2)` where `φ̄ = (cos φ, sin φ)`.
pub fn solenoid_step(s: SolenoidState, a: f64) -> SolenoidState {
    let (sin, cos) = s.phi.sin_cos();
    let mut phi = (2.0 * s.phi) % TAU;
    if phi < 0.0 {
        phi += TAU;
    }
    SolenoidState {
        phi,
        v: [a * s.v[0] + 0.5 * cos, a * s.v[1] + 0.5 * sin],
    }
}

/// Torus coordinates in R³ with unit major and minor radius:
/// `((1 + v₁) cos φ, (1 + v₁) sin φ, v₂)`.
pub fn solenoid_embed(s: &SolenoidState) -> [f64; 3] {
    let (sin, cos) = s.phi.sin_cos();
    let rho = 1.0 + s.v[0];
    [rho * cos, rho * sin, s.v[1]]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Solenoid {
    a: f64,
}

impl Solenoid {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 0.25) {
            return Err(Error::param(
                "a",
                a,
                "solenoid contraction must lie in (0, 1/4)",
            ));
        }
        Ok(Solenoid { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

impl DiscreteSystem for Solenoid {
    type State = SolenoidState;
    type Point = [f64; 3];

    #[inline]
    fn step(&self, s: &SolenoidState) -> Result<SolenoidState> {
        Ok(solenoid_step(*s, self.a))
    }

    #[inline]
    fn embed(&self, s: &SolenoidState) -> [f64; 3] {
        solenoid_embed(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use std::f64::consts::PI;

    #[test]
    fn plug_in_values() {
        let s = solenoid_step(
            SolenoidState {
                phi: 0.0,
                v: [0.0, 0.0],
            },
            0.076,
        );
        assert_eq!(s.phi, 0.0);
        assert_eq!(s.v, [0.5, 0.0]);
        let s = solenoid_step(
            SolenoidState {
                phi: PI / 3.0,
                v: [0.0, 0.0],
            },
            0.076,
        );
        assert!((s.phi - 2.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn image_stays_in_small_disk() {
        let mut r = rng::stream(3, 0);
        for _ in 0..10_000 {
            let a = r.random_range(1e-6..0.25);
            let rad: f64 = r.random::<f64>().sqrt();
            let ang = r.random_range(0.0..TAU);
            let s = SolenoidState {
                phi: r.random_range(0.0..TAU),
                v: [rad * ang.cos(), rad * ang.sin()],
            };
            let t = solenoid_step(s, a);
            let norm = t.v[0].hypot(t.v[1]);
            assert!(norm <= a + 0.5 + 1e-15 && norm < 0.75);
            assert!((0.0..TAU).contains(&t.phi));
        }
    }

    #[test]
    fn contraction_range_checked() {
        assert!(Solenoid::new(0.25).is_err());
        assert!(Solenoid::new(0.0).is_err());
        assert!(Solenoid::new(0.076).is_ok());
    }
}
