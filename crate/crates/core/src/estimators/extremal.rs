use rand_distr::{Distribution, Exp};

use super::{EstimateKind, EstimateRecord};
use crate::error::{Error, Result};
use crate::rng;

/// Indices at which a sampled series exceeds its threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ExceedanceIndexSeries {
    pub indices: Vec<usize>,
    pub len: usize,
    pub dt: f64,
}

impl ExceedanceIndexSeries {
    pub fn new(indices: Vec<usize>, len: usize, dt: f64) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "exceedance indices must strictly increase".into(),
            ));
        }
        if indices.last().is_some_and(|&i| i >= len) {
            return Err(Error::InvalidInput(
                "exceedance index beyond series length".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::param("dt", dt, "sampling step must be positive"));
        }
        Ok(ExceedanceIndexSeries { indices, len, dt })
    }

    /// Exceedances of the empirical order statistic leaving a fraction `q`
    /// of `values` at or below it.
    pub fn from_series(values: &[f64], q: f64, dt: f64) -> Result<Self> {
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
        sorted.sort_by(f64::total_cmp);
        let g = sorted[n - m - 1];
        let indices = values
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > g)
            .map(|(i, _)| i)
            .collect();
        Self::new(indices, n, dt)
    }

    pub fn count(&self) -> usize {
        self.indices.len()
    }

    /// Shift every index by `offset`, extending the series length to match.
    pub fn shifted(&self, offset: usize) -> Self {
        ExceedanceIndexSeries {
            indices: self.indices.iter().map(|i| i + offset).collect(),
            len: self.len + offset,
            dt: self.dt,
        }
    }
}

/// Likelihood estimator of the extremal index from inter-exceedance gaps.
///
/// With gaps `T_i`, `S_i = T_i − 1`, `N` exceedances, `N_c = #{S_i > 0}`
/// and `p = 1 − q`:
/// `θ̂ = (ΣpS + N−1 + N_c − √((ΣpS + N−1 + N_c)² − 8 N_c ΣpS)) / (2ΣpS)`,
/// clamped to `[1/N, 1]`. When every gap is 1 the sum vanishes and the
/// result is the flagged lower clamp.
pub fn suveges_theta(e: &ExceedanceIndexSeries, q: f64) -> Result<EstimateRecord> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param("q", q, "quantile must lie in (0, 1)"));
    }
    let n = e.indices.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} exceedances, need at least 2"
        )));
    }
    let p = 1.0 - q;
    let mut sum_ps = 0.0;
    let mut n_c = 0usize;
    for w in e.indices.windows(2) {
        let s = (w[1] - w[0] - 1) as f64;
        if s > 0.0 {
            n_c += 1;
            sum_ps += p * s;
        }
    }
    let floor = 1.0 / n as f64;
    let mut rec = EstimateRecord::new(EstimateKind::ExtremalIndex, floor, n)
        .with_param("quantile", q)
        .with_param("n_c", n_c as f64);
    if sum_ps == 0.0 {
        rec.flagged = true;
        return Ok(rec);
    }
    let a = sum_ps + (n - 1) as f64 + n_c as f64;
    let disc = (a * a - 8.0 * n_c as f64 * sum_ps).max(0.0);
    let theta = (a - disc.sqrt()) / (2.0 * sum_ps);
    rec.flagged = !(theta >= floor && theta <= 1.0);
    rec.value = theta.clamp(floor, 1.0);
    Ok(rec)
}

/// Mean cluster duration `dt/θ`.
pub fn mean_cluster_time(theta: f64, dt: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param(
            "theta",
            theta,
            "extremal index must lie in (0, 1]",
        ));
    }
    if !(dt > 0.0) {
        return Err(Error::param("dt", dt, "sampling step must be positive"));
    }
    Ok(dt / theta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxPairSeries {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
}

/// `V_i` i.i.d. with `P(V ≤ y) = 1 − e^{−y/λ}` and `U_i = max(V_{i−1}, V_i)`.
///
/// `n + 1` variates are drawn so both returned series have length `n`;
/// `U_i` pairs `V_i` with its predecessor.
pub fn synthetic_max_pair(n: usize, lambda: f64, seed: u64) -> Result<MaxPairSeries> {
    if n < 2 {
        return Err(Error::param("n", n as f64, "need at least 2 samples"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", lambda, "scale must be positive"));
    }
    let exp = Exp::new(1.0 / lambda).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut r = rng::stream(seed, rng::streams::SAMPLING);
    let raw: Vec<f64> = (0..=n).map(|_| exp.sample(&mut r)).collect();
    let u = raw.windows(2).map(|w| w[0].max(w[1])).collect();
    Ok(MaxPairSeries {
        v: raw[1..].to_vec(),
        u,
    })
}

#[cfg(test)]
mod tests {
    use super::super::stats::ks_one_sample;
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn all_adjacent_is_flagged_floor() {
        let e = ExceedanceIndexSeries::new((0..50).collect(), 50, 1.0).unwrap();
        let t = suveges_theta(&e, 0.9).unwrap();
        assert!(t.flagged);
        assert!((t.value - 1.0 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_exceedances_have_unit_index() {
        let mut r = rng::stream(71, 0);
        let n = 1_000_000;
        let idx: Vec<usize> = (0..n).filter(|_| r.random::<f64>() < 0.01).collect();
        let e = ExceedanceIndexSeries::new(idx, n, 1.0).unwrap();
        let t = suveges_theta(&e, 0.99).unwrap();
        assert!((t.value - 1.0).abs() < 0.05, "{}", t.value);
    }

    #[test]
    fn max_pair_has_half_index() {
        let s = synthetic_max_pair(100_000, 1.0, 72).unwrap();
        let e = ExceedanceIndexSeries::from_series(&s.u, 0.99, 1.0).unwrap();
        let t = suveges_theta(&e, 0.99).unwrap();
        assert!((t.value - 0.5).abs() < 0.05, "{}", t.value);
        assert!(s.u.iter().zip(&s.v).all(|(u, v)| u >= v));
    }

    #[test]
    fn max_pair_distribution_is_squared() {
        let n = 100_000;
        let s = synthetic_max_pair(n, 2.0, 73).unwrap();
        let d = ks_one_sample(&s.u, |y| (1.0 - (-y / 2.0).exp()).powi(2));
        assert!(d < 1.36 / (n as f64).sqrt(), "{d}");
    }

    #[test]
    fn fixed_length_clusters() {
        // clusters of L consecutive exceedances separated by long gaps
        let l = 4;
        let idx: Vec<usize> = (0..500)
            .flat_map(|c| (0..l).map(move |j| c * 400 + j))
            .collect();
        let n = 500 * 400;
        let e = ExceedanceIndexSeries::new(idx, n, 0.05).unwrap();
        let q = 1.0 - e.count() as f64 / n as f64;
        let t = suveges_theta(&e, q).unwrap();
        let tc = mean_cluster_time(t.value, 0.05).unwrap();
        assert!(
            (tc - l as f64 * 0.05).abs() < 0.1 * l as f64 * 0.05,
            "tc={tc}"
        );
    }

    #[test]
    fn cluster_time_formula() {
        assert_eq!(mean_cluster_time(1.0, 0.0198).unwrap(), 0.0198);
        assert!((mean_cluster_time(0.5, 0.01).unwrap() - 0.02).abs() < 1e-15);
        assert!(mean_cluster_time(0.0, 0.01).is_err());
        assert!(mean_cluster_time(1.5, 0.01).is_err());
    }

    #[test]
    fn series_validation() {
        assert!(ExceedanceIndexSeries::new(vec![3, 2], 5, 1.0).is_err());
        assert!(ExceedanceIndexSeries::new(vec![1, 9], 5, 1.0).is_err());
        assert!(synthetic_max_pair(1, 1.0, 0).is_err());
        let one = ExceedanceIndexSeries::new(vec![2], 5, 1.0).unwrap();
        assert!(suveges_theta(&one, 0.9).is_err());
    }

    proptest! {
        #[test]
        fn shift_invariant(seed in any::<u64>(), offset in 0usize..10_000) {
            let mut r = rng::stream(seed, 0);
            let mut idx: Vec<usize> = (0..200).map(|_| r.random_range(0..20_000)).collect();
            idx.sort_unstable();
            idx.dedup();
            let e = ExceedanceIndexSeries::new(idx, 20_000, 1.0).unwrap();
            let a = suveges_theta(&e, 0.99).unwrap().value;
            let b = suveges_theta(&e.shifted(offset), 0.99).unwrap().value;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn theta_in_unit_interval(seed in any::<u64>(), q in 0.5f64..0.999) {
            let mut r = rng::stream(seed, 0);
            let x: Vec<f64> = (0..2000).map(|_| r.random()).collect();
            if let Ok(e) = ExceedanceIndexSeries::from_series(&x, q, 1.0) {
                if let Ok(t) = suveges_theta(&e, q) {
                    prop_assert!(t.value > 0.0 && t.value <= 1.0);
                }
            }
        }
    }
}
