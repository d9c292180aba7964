use super::{EstimateKind, EstimateRecord};
use crate::error::{Error, Result};
use crate::recurrence::RecurrenceBuffer;

pub const MIN_EXCESSES: usize = 10;

/// Excesses `u_i = X_i − g_q > 0` over an empirical threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcessSample {
    pub threshold: f64,
    pub quantile: f64,
    pub excesses: Vec<f64>,
}

impl ExcessSample {
    /// Threshold at the empirical order statistic leaving a fraction `q` of
    /// `values` at or below it; the `round((1−q)N)` largest values minus ties
    /// at the threshold are the excesses.
    pub fn from_values(values: &[f64], q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::param("q", q, "quantile must lie in (0, 1)"));
        }
        let n = values.len();
        let m = ((1.0 - q) * n as f64).round() as usize;
        if m == 0 || m >= n {
            return Err(Error::InsufficientData(format!(
                "quantile {q} on {n} values leaves {m} exceedances"
            )));
        }
        let mut sorted = values.to_vec();
        if sorted.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidInput("NaN in excess data".into()));
        }
        sorted.sort_by(f64::total_cmp);
        let threshold = sorted[n - m - 1];
        let excesses: Vec<f64> = sorted[n - m..]
            .iter()
            .map(|&x| x - threshold)
            .filter(|&u| u > 0.0)
            .collect();
        if excesses.is_empty() {
            return Err(Error::Degenerate(
                "all exceedances tie with the threshold".into(),
            ));
        }
        Ok(ExcessSample {
            threshold,
            quantile: q,
            excesses,
        })
    }

    /// `X = −log d` over positive distances.
    pub fn from_distances(distances: &[f64], q: f64) -> Result<Self> {
        if distances.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::InvalidInput("distances must be positive".into()));
        }
        let x: Vec<f64> = distances.iter().map(|d| -d.ln()).collect();
        Self::from_values(&x, q)
    }

    pub fn len(&self) -> usize {
        self.excesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excesses.is_empty()
    }
}

/// Excesses of `−log d` over the threshold `−log r`, for `d < r`.
pub fn excesses_at_radius(distances: &[f64], r: f64) -> Result<ExcessSample> {
    if !(r > 0.0) {
        return Err(Error::param("r", r, "threshold radius must be positive"));
    }
    let excesses: Vec<f64> = distances
        .iter()
        .filter(|&&d| d > 0.0 && d < r)
        .map(|&d| (r / d).ln())
        .filter(|&u| u > 0.0)
        .collect();
    Ok(ExcessSample {
        threshold: -r.ln(),
        quantile: f64::NAN,
        excesses,
    })
}

/// Within-buffer quantile threshold on `X = −log d`.
pub fn excesses_from_buffer<S>(buf: &RecurrenceBuffer<S>, q: f64) -> Result<ExcessSample> {
    if !buf.is_full() {
        return Err(Error::InsufficientData(format!(
            "buffer holds {} of {} recurrences",
            buf.len(),
            buf.capacity()
        )));
    }
    ExcessSample::from_distances(&buf.distances(), q)
}

/// Exponential MLE: `Δ̂ = 1/mean(u)`, stderr `Δ̂/√n`.
pub fn ebd_fit(s: &ExcessSample) -> Result<EstimateRecord> {
    let n = s.excesses.len();
    if n < MIN_EXCESSES {
        return Err(Error::InsufficientData(format!(
            "{n} excesses, need at least {MIN_EXCESSES}"
        )));
    }
    let mean = s.excesses.iter().sum::<f64>() / n as f64;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Degenerate(format!("mean excess {mean}")));
    }
    let value = 1.0 / mean;
    let mut rec =
        EstimateRecord::new(EstimateKind::Ebd, value, n).with_param("threshold", s.threshold);
    if s.quantile.is_finite() {
        rec = rec.with_param("quantile", s.quantile);
    }
    rec.stderr = Some(value / (n as f64).sqrt());
    Ok(rec)
}

/// Empirical `μ(B_{br})/μ(B_r)`: the fraction of stored distances within
/// `b` times the buffer radius.
pub fn regular_variation_ratio<S>(buf: &RecurrenceBuffer<S>, b: f64) -> f64 {
    if buf.is_empty() {
        return f64::NAN;
    }
    if b >= 1.0 {
        return buf.len() as f64 / buf.capacity() as f64;
    }
    buf.count_within(b * buf.radius()) as f64 / buf.capacity() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn constant_excesses() {
        let s = ExcessSample {
            threshold: 0.0,
            quantile: 0.9,
            excesses: vec![0.25; 40],
        };
        let e = ebd_fit(&s).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
        assert!((e.stderr.unwrap() - 4.0 / 40f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exponential_rate_recovered() {
        let mut r = rng::stream(51, 0);
        let exp = Exp::new(1.26).unwrap();
        let excesses: Vec<f64> = (0..100_000).map(|_| exp.sample(&mut r)).collect();
        let s = ExcessSample {
            threshold: 0.0,
            quantile: 0.5,
            excesses,
        };
        let e = ebd_fit(&s).unwrap();
        assert!((e.value - 1.26).abs() < 3.0 * e.stderr.unwrap());
    }

    #[test]
    fn line_through_reference_gives_unit_dimension() {
        let mut r = rng::stream(52, 0);
        let d: Vec<f64> = (0..100_000)
            .map(|_| (r.random::<f64>() - 0.5).abs())
            .collect();
        let e = ebd_fit(&ExcessSample::from_distances(&d, 0.9).unwrap()).unwrap();
        assert!(
            (e.value - 1.0).abs() < 3.0 * e.stderr.unwrap(),
            "{}",
            e.value
        );
    }

    #[test]
    fn quantile_convention_counts() {
        let mut r = rng::stream(53, 0);
        let mut buf = RecurrenceBuffer::new(5000);
        for i in 0..100_000 {
            buf.offer(r.random::<f64>(), (), i);
        }
        let s = excesses_from_buffer(&buf, 0.99).unwrap();
        assert!((s.len() as i64 - 50).abs() <= 1, "{}", s.len());
        assert!(s.excesses.iter().all(|&u| u > 0.0));
        let at_outer = excesses_at_radius(&buf.distances(), buf.outer_radius()).unwrap();
        assert_eq!(at_outer.len(), 5000);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        assert!(ExcessSample::from_distances(&[0.3; 100], 0.9).is_err());
        assert!(ExcessSample::from_values(&[1.0; 100], 1.0).is_err());
        assert!(ExcessSample::from_values(&[1.0; 100], 0.0).is_err());
        let partial: RecurrenceBuffer<()> = RecurrenceBuffer::new(10);
        assert!(excesses_from_buffer(&partial, 0.5).is_err());
        let few = ExcessSample {
            threshold: 0.0,
            quantile: 0.9,
            excesses: vec![1.0; 3],
        };
        assert!(ebd_fit(&few).is_err());
    }

    #[test]
    fn ratio_on_line_and_disk() {
        let mut r = rng::stream(54, 0);
        let k = 20_000;
        let mut line = RecurrenceBuffer::new(k);
        let mut disk = RecurrenceBuffer::new(k);
        for i in 0..k as u64 {
            line.offer(r.random::<f64>(), (), i);
            disk.offer(r.random::<f64>().sqrt(), (), i);
        }
        let se = (0.25f64 / k as f64).sqrt();
        assert!((regular_variation_ratio(&line, 0.5) - 0.5).abs() < 3.0 * se);
        assert!((regular_variation_ratio(&disk, 0.5) - 0.25).abs() < 3.0 * se);
        assert_eq!(regular_variation_ratio(&line, 1.0), 1.0);
    }

    proptest! {
        #[test]
        fn fit_is_permutation_and_shift_invariant(seed in any::<u64>(), c in -5.0f64..5.0) {
            let mut r = rng::stream(seed, 0);
            let x: Vec<f64> = (0..500).map(|_| r.random::<f64>() * 10.0).collect();
            let a = ebd_fit(&ExcessSample::from_values(&x, 0.9).unwrap()).unwrap().value;
            let mut y: Vec<f64> = x.iter().map(|v| v + c).collect();
            y.shuffle(&mut r);
            let b = ebd_fit(&ExcessSample::from_values(&y, 0.9).unwrap()).unwrap().value;
            prop_assert!((a - b).abs() < 1e-9 * a);
        }

        #[test]
        fn ratio_scale_invariant(seed in any::<u64>(), c in 1e-6f64..1e6) {
            let mut r = rng::stream(seed, 0);
            let mut a = RecurrenceBuffer::new(200);
            let mut b = RecurrenceBuffer::new(200);
            for i in 0..1000u64 {
                // dyadic values keep the scaled comparison exact
                let d = (r.random_range(1..1u64 << 20) as f64) / (1u64 << 20) as f64;
                let s = 2f64.powi(c.log2().round() as i32);
                a.offer(d, (), i);
                b.offer(d * s, (), i);
            }
            prop_assert_eq!(regular_variation_ratio(&a, 0.5), regular_variation_ratio(&b, 0.5));
        }
    }
}
