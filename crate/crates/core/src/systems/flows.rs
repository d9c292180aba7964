use crate::error::{Error, Result};

/// Right-hand side of an autonomous or non-autonomous ODE in `R^D`.
pub trait VectorField<const D: usize>: Sync {
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lorenz63 {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz63 {
    fn default() -> Self {
        Lorenz63 {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl VectorField<3> for Lorenz63 {
    #[inline]
    fn rhs(&self, _t: f64, y: &[f64; 3]) -> [f64; 3] {
        [
            self.sigma * (y[1] - y[0]),
            y[0] * (self.rho - y[2]) - y[1],
            y[0] * y[1] - self.beta * y[2],
        ]
    }
}

/// `ẋⱼ = x_{j-1}(x_{j+1} - x_{j-2}) - xⱼ + F` with cyclic indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lorenz96 {
    pub forcing: f64,
}

impl Default for Lorenz96 {
    fn default() -> Self {
        Lorenz96 { forcing: 32.0 }
    }
}

impl Lorenz96 {
    /// Writes the tendency of `y` (any length `n >= 4`) into `out`.
    pub fn rhs_into(&self, y: &[f64], out: &mut [f64]) {
        let n = y.len();
        for j in 0..n {
            let prev = y[(j + n - 1) % n];
            let prev2 = y[(j + n - 2) % n];
            let next = y[(j + 1) % n];
            out[j] = prev * (next - prev2) - y[j] + self.forcing;
        }
    }
}

impl<const N: usize> VectorField<N> for Lorenz96 {
    #[inline]
    fn rhs(&self, _t: f64, y: &[f64; N]) -> [f64; N] {
        let mut out = [0.0; N];
        self.rhs_into(y, &mut out);
        out
    }
}

/// Hénon–Heiles with state ordered `(x, p_x, y, p_y)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HenonHeiles;

impl VectorField<4> for HenonHeiles {
    #[inline]
    fn rhs(&self, _t: f64, s: &[f64; 4]) -> [f64; 4] {
        let (x, px, y, py) = (s[0], s[1], s[2], s[3]);
        [px, -x - 2.0 * x * y, py, -y - (x * x - y * y)]
    }
}

/// `H = (p_x² + p_y²)/2 + (x² + y²)/2 + x²y - y³/3`.
pub fn henon_heiles_energy(s: &[f64; 4]) -> f64 {
    let (x, px, y, py) = (s[0], s[1], s[2], s[3]);
    0.5 * (px * px + py * py) + 0.5 * (x * x + y * y) + x * x * y - y * y * y / 3.0
}

/// `ẍ = -ω² x` as a first-order system; used to check the integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicOscillator {
    pub omega: f64,
}

impl VectorField<2> for HarmonicOscillator {
    fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -self.omega * self.omega * y[0]]
    }
}

/// Evaluates a registered flow with default parameters.
pub fn flow_rhs(name: &str, s: &[f64], t: f64) -> Result<Vec<f64>> {
    let need = |d: usize| {
        if s.len() == d {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{name} expects a state of length {d}, got {}",
                s.len()
            )))
        }
    };
    match name {
        "lorenz63" => {
            need(3)?;
            Ok(Lorenz63::default().rhs(t, &[s[0], s[1], s[2]]).to_vec())
        }
        "lorenz96" => {
            if s.len() < 4 {
                return Err(Error::InvalidInput("lorenz96 needs n >= 4".into()));
            }
            let mut out = vec![0.0; s.len()];
            Lorenz96::default().rhs_into(s, &mut out);
            Ok(out)
        }
        "henon-heiles" => {
            need(4)?;
            Ok(HenonHeiles.rhs(t, &[s[0], s[1], s[2], s[3]]).to_vec())
        }
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorenz63_fixed_points() {
        assert_eq!(
            flow_rhs("lorenz63", &[0.0, 0.0, 0.0], 0.0).unwrap(),
            vec![0.0; 3]
        );
        let l = Lorenz63::default();
        let c = (l.beta * (l.rho - 1.0)).sqrt();
        let f = l.rhs(0.0, &[c, c, l.rho - 1.0]);
        assert!(f.iter().all(|v| v.abs() < 1e-12), "{f:?}");
    }

    #[test]
    fn lorenz96_uniform_fixed_point() {
        let f = flow_rhs("lorenz96", &[32.0; 4], 0.0).unwrap();
        assert_eq!(f, vec![0.0; 4]);
    }

    #[test]
    fn lorenz96_cyclic_equivariance() {
        let y = [1.5, -2.0, 7.25, 0.5];
        let f = Lorenz96::default().rhs(0.0, &y);
        let rot = [y[1], y[2], y[3], y[0]];
        let g = Lorenz96::default().rhs(0.0, &rot);
        for j in 0..4 {
            assert!((g[j] - f[(j + 1) % 4]).abs() < 1e-12);
        }
    }

    #[test]
    fn henon_heiles_field_is_hamiltonian() {
        // dH/dt = ∇H · f = 0 at any point
        let s = [0.1, -0.25, 0.42, 0.05];
        let f = HenonHeiles.rhs(0.0, &s);
        let (x, px, y, py) = (s[0], s[1], s[2], s[3]);
        let grad = [x + 2.0 * x * y, px, y + x * x - y * y, py];
        let dot: f64 = grad.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-15);
    }

    #[test]
    fn unknown_flow_name() {
        assert!(matches!(
            flow_rhs("rossler", &[0.0; 3], 0.0),
            Err(Error::UnknownSystem(_))
        ));
        assert!(flow_rhs("lorenz63", &[0.0; 4], 0.0).is_err());
    }
}
