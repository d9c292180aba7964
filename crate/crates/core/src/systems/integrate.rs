//! Fixed-step classical RK4 with cubic-Hermite dense output.

use super::flows::VectorField;
use crate::error::{Error, Result};

/// One accepted RK4 step with endpoint derivatives for Hermite interpolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSegment<const D: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; D],
    pub y1: [f64; D],
    pub f0: [f64; D],
    pub f1: [f64; D],
}

impl<const D: usize> FlowSegment<D> {
    #[inline]
    pub fn dt(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Interpolated state at fraction `s ∈ [0, 1]` of the step.
    #[inline]
    pub fn eval_frac(&self, s: f64) -> [f64; D] {
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let h = self.dt();
        let mut out = [0.0; D];
        for i in 0..D {
            out[i] =
                h00 * self.y0[i] + h10 * h * self.f0[i] + h01 * self.y1[i] + h11 * h * self.f1[i];
        }
        out
    }

    /// Time derivative of the interpolant at fraction `s`.
    #[inline]
    pub fn deriv_frac(&self, s: f64) -> [f64; D] {
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let h = self.dt();
        let mut out = [0.0; D];
        for i in 0..D {
            out[i] =
                (d00 * self.y0[i] + d01 * self.y1[i]) / h + d10 * self.f0[i] + d11 * self.f1[i];
        }
        out
    }

    /// Interpolated state at time `t ∈ [t0, t1]`.
    pub fn eval(&self, t: f64) -> [f64; D] {
        self.eval_frac((t - self.t0) / self.dt())
    }

    /// Upper bound on `|y(s) - y0|` over the step, from the Hermite basis
    /// (`|h01| ≤ 1`, `|h10|, |h11| ≤ 4/27`).
    pub fn excursion_bound(&self) -> f64 {
        let mut dy = 0.0;
        let mut n0 = 0.0;
        let mut n1 = 0.0;
        for i in 0..D {
            dy += (self.y1[i] - self.y0[i]).powi(2);
            n0 += self.f0[i] * self.f0[i];
            n1 += self.f1[i] * self.f1[i];
        }
        dy.sqrt() + 4.0 / 27.0 * self.dt() * (n0.sqrt() + n1.sqrt())
    }
}

#[inline]
fn axpy<const D: usize>(y: &[f64; D], a: f64, k: &[f64; D]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        out[i] += a * k[i];
    }
    out
}

/// Lazily produced RK4 segments; stops after `steps` segments when bounded.
pub struct SegmentStream<'a, F, const D: usize> {
    field: &'a F,
    t: f64,
    y: [f64; D],
    f: [f64; D],
    dt: f64,
    index: usize,
    limit: Option<usize>,
    failed: bool,
}

impl<'a, F: VectorField<D>, const D: usize> SegmentStream<'a, F, D> {
    pub fn new(field: &'a F, y0: [f64; D], t0: f64, dt: f64, steps: Option<usize>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", dt, "time step must be positive"));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("initial state is not finite".into()));
        }
        let f = field.rhs(t0, &y0);
        Ok(SegmentStream {
            field,
            t: t0,
            y: y0,
            f,
            dt,
            index: 0,
            limit: steps,
            failed: false,
        })
    }

    /// Current state (end of the last emitted segment).
    pub fn state(&self) -> [f64; D] {
        self.y
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Advances `n` steps without materialising segments.
    pub fn skip_steps(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.advance()?;
        }
        Ok(())
    }

    fn advance(&mut self) -> Result<FlowSegment<D>> {
        let h = self.dt;
        let k1 = self.f;
        let k2 = self
            .field
            .rhs(self.t + 0.5 * h, &axpy(&self.y, 0.5 * h, &k1));
        let k3 = self
            .field
            .rhs(self.t + 0.5 * h, &axpy(&self.y, 0.5 * h, &k2));
        let k4 = self.field.rhs(self.t + h, &axpy(&self.y, h, &k3));
        let mut y1 = self.y;
        for i in 0..D {
            y1[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t1 = self.t + h;
        if y1.iter().any(|v| !v.is_finite()) {
            self.failed = true;
            return Err(Error::Escaped { step: self.index });
        }
        let f1 = self.field.rhs(t1, &y1);
        let seg = FlowSegment {
            t0: self.t,
            t1,
            y0: self.y,
            y1,
            f0: k1,
            f1,
        };
        self.t = t1;
        self.y = y1;
        self.f = f1;
        self.index += 1;
        Ok(seg)
    }
}

impl<F: VectorField<D>, const D: usize> Iterator for SegmentStream<'_, F, D> {
    type Item = Result<FlowSegment<D>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.limit.is_some_and(|l| self.index >= l) {
            return None;
        }
        Some(self.advance())
    }
}

/// `steps` RK4 segments starting at `(0, y0)`.
pub fn integrate<F: VectorField<D>, const D: usize>(
    field: &F,
    y0: [f64; D],
    dt: f64,
    steps: usize,
) -> Result<Vec<FlowSegment<D>>> {
    SegmentStream::new(field, y0, 0.0, dt, Some(steps))?.collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{henon_heiles_energy, HarmonicOscillator, HenonHeiles, Lorenz63};

    #[test]
    fn harmonic_amplitude_error() {
        let osc = HarmonicOscillator { omega: 1.0 };
        let segs = integrate(&osc, [1.0, 0.0], 0.01, 10_000).unwrap();
        let y = segs.last().unwrap().y1;
        let amp = (y[0] * y[0] + y[1] * y[1]).sqrt();
        assert!((amp - 1.0).abs() < 1e-7);
        let t = segs.last().unwrap().t1;
        assert!((y[0] - t.cos()).abs() < 1e-7);
    }

    #[test]
    fn henon_heiles_energy_drift() {
        let y0 = [0.0, -0.25, 0.42, 0.0];
        let e0 = henon_heiles_energy(&y0);
        let mut stream = SegmentStream::new(&HenonHeiles, y0, 0.0, 0.01, None).unwrap();
        stream.skip_steps(100_000).unwrap();
        let e1 = henon_heiles_energy(&stream.state());
        assert!(((e1 - e0) / e0).abs() < 1e-5, "drift {}", (e1 - e0) / e0);
    }

    #[test]
    fn local_error_scales_as_fifth_power() {
        let osc = HarmonicOscillator { omega: 1.0 };
        let err = |h: f64| {
            let s = integrate(&osc, [1.0, 0.0], h, 1).unwrap()[0];
            let exact = [h.cos(), -h.sin()];
            ((s.y1[0] - exact[0]).powi(2) + (s.y1[1] - exact[1]).powi(2)).sqrt()
        };
        let ratio = err(0.2) / err(0.1);
        assert!((ratio / 32.0 - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn hermite_hits_endpoints() {
        let segs = integrate(&Lorenz63::default(), [1.0, 2.0, 20.0], 0.01, 50).unwrap();
        for s in &segs {
            assert_eq!(s.eval(s.t0), s.y0);
            assert_eq!(s.eval_frac(1.0), s.y1);
            let d = s.deriv_frac(0.0);
            for i in 0..3 {
                assert!((d[i] - s.f0[i]).abs() < 1e-9 * (1.0 + s.f0[i].abs()));
            }
        }
        for w in segs.windows(2) {
            assert_eq!(w[0].t1, w[1].t0);
            assert_eq!(w[0].y1, w[1].y0);
        }
    }

    #[test]
    fn dense_output_is_fourth_order_accurate() {
        let osc = HarmonicOscillator { omega: 1.0 };
        let segs = integrate(&osc, [1.0, 0.0], 0.05, 40).unwrap();
        for s in &segs {
            let t = 0.5 * (s.t0 + s.t1);
            let y = s.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-6);
        }
    }

    #[test]
    fn blow_up_reports_step() {
        struct Blow;
        impl VectorField<1> for Blow {
            fn rhs(&self, _t: f64, y: &[f64; 1]) -> [f64; 1] {
                [y[0] * y[0]]
            }
        }
        let err = integrate(&Blow, [1.0], 0.5, 100).unwrap_err();
        assert!(matches!(err, Error::Escaped { .. }));
        assert!(SegmentStream::new(&Blow, [1.0], 0.0, 0.0, None).is_err());
    }

    #[test]
    fn excursion_bound_holds() {
        let segs = integrate(&Lorenz63::default(), [1.0, 2.0, 20.0], 0.02, 200).unwrap();
        for s in &segs {
            let b = s.excursion_bound();
            for j in 0..=16 {
                let y = s.eval_frac(j as f64 / 16.0);
                let d: f64 = (0..3).map(|i| (y[i] - s.y0[i]).powi(2)).sum::<f64>().sqrt();
                assert!(d <= b + 1e-12);
            }
        }
    }
}
