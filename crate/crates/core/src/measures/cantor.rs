//! Bernoulli(1/2, 1/2) measure on the middle-third Cantor set.

use rand::Rng;

use super::{MeasureMethod, MeasureValue};
use crate::error::{Error, Result};
use crate::systems::DEFAULT_SYMBOL_DEPTH;

const STAIRCASE_DIGITS: usize = 64;

/// The Cantor ternary function (devil's staircase).
///
/// Reads base-3 digits of `x` until the first 1; earlier 2s become binary 1s
/// and the first 1 terminates the expansion with a final binary 1.
pub fn cantor_ternary(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut x = x;
    let mut out = 0.0;
    let mut bit = 0.5;
    for _ in 0..STAIRCASE_DIGITS {
        x *= 3.0;
        let d = x.floor();
        x -= d;
        if d >= 2.0 {
            out += bit;
        } else if d >= 1.0 {
            return out + bit;
        }
        bit *= 0.5;
    }
    out
}

/// A point of `C_∞` given by its ternary digits (each 0 or 2).
#[derive(Clone, Debug, PartialEq)]
pub struct CantorPoint {
    digits: Vec<u8>,
    value: f64,
}

fn embed(digits: &[u8]) -> f64 {
    digits
        .iter()
        .rev()
        .fold(0.0, |acc, &d| (acc + d as f64) / 3.0)
}

impl CantorPoint {
    pub fn from_digits(digits: Vec<u8>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::InvalidInput(
                "a Cantor point needs at least one digit".into(),
            ));
        }
        if let Some(bad) = digits.iter().find(|&&d| d != 0 && d != 2) {
            return Err(Error::InvalidInput(format!(
                "digit {bad} is not in {{0,2}}"
            )));
        }
        let value = embed(&digits);
        Ok(CantorPoint { digits, value })
    }

    /// Fair Bernoulli digits to `depth`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> Self {
        let digits = (0..depth.max(1))
            .map(|_| if rng.random::<bool>() { 2 } else { 0 })
            .collect();
        CantorPoint::from_digits(digits).expect("valid digits")
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }
}

impl Default for CantorPoint {
    fn default() -> Self {
        CantorPoint::from_digits(vec![0; DEFAULT_SYMBOL_DEPTH]).expect("valid digits")
    }
}

const SCALE_SNAP: f64 = 1e-12;

/// `N` with `3^{-(N+1)} ≤ r < 3^{-N}`, and `s = 3^{N+1} r ∈ [1, 3)`.
/// Radii within `SCALE_SNAP` (relative) of a power of three count as that power.
fn ternary_scale(r: f64) -> (usize, f64) {
    let mut n = (-r.ln() / 3f64.ln()).floor().max(0.0) as usize;
    let mut s = r * 3f64.powi(n as i32 + 1);
    while s < 1.0 - SCALE_SNAP {
        s *= 3.0;
        n += 1;
    }
    while n > 0 && s >= 3.0 * (1.0 - SCALE_SNAP) {
        s /= 3.0;
        n -= 1;
    }
    (n, s.clamp(1.0, 3.0))
}

/// Exact Bernoulli measure of the closed ball `B_r(ζ)`.
///
/// The level-`N+1` cylinder holding `ζ` lies entirely inside the ball; the
/// only other mass within reach sits in its sibling across the gap, entered
/// from the gap-side endpoint `x_e` by `t = r - 3^{-(N+1)} - |ζ - x_e|`,
/// contributing `2^{-(N+1)} C(3^{N+1} t)`.
pub fn cantor_ball_measure(zeta: &CantorPoint, r: f64) -> Result<MeasureValue> {
    if !(r > 0.0) || r.is_nan() {
        return Err(Error::param("r", r, "radius must be positive"));
    }
    if r >= 1.0 {
        return Ok(MeasureValue {
            mu: 1.0,
            method: MeasureMethod::ExactCantor,
        });
    }
    let depth = zeta.depth();
    let floor = 3f64.powi(-(depth as i32));
    let (n, s) = ternary_scale(r);
    if n + 1 >= depth {
        return Err(Error::BelowResolution { r, floor });
    }
    // distance from ζ to the gap-side endpoint, in units of 3^{-(N+1)}
    let tail = embed(&zeta.digits[n + 1..]);
    let e = if zeta.digits[n] == 0 {
        1.0 - tail
    } else {
        tail
    };
    let arg = s - 1.0 - e;
    let sibling = if arg > 0.0 {
        cantor_ternary(arg.min(1.0))
    } else {
        0.0
    };
    let mu = 0.5f64.powi(n as i32 + 1) * (1.0 + sibling);
    Ok(MeasureValue {
        mu,
        method: MeasureMethod::ExactCantor,
    })
}

/// `μ(B_{br}(ζ)) / μ(B_r(ζ))` from the exact oracle.
pub fn cantor_ratio(zeta: &CantorPoint, r: f64, b: f64) -> Result<f64> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::param("b", b, "ratio scale must lie in (0, 1]"));
    }
    if b == 1.0 {
        cantor_ball_measure(zeta, r)?;
        return Ok(1.0);
    }
    let big = cantor_ball_measure(zeta, r)?.mu;
    let small = cantor_ball_measure(zeta, b * r)?.mu;
    Ok(small / big)
}


#[cfg(test)]
mod tests {
    use super::oracle::cylinder_measure;
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn staircase_values() {
        assert_eq!(cantor_ternary(0.0), 0.0);
        assert_eq!(cantor_ternary(1.0), 1.0);
        assert!((cantor_ternary(1.0 / 3.0) - 0.5).abs() < 1e-15);
        assert!((cantor_ternary(0.25) - 1.0 / 3.0).abs() < 1e-12);
        assert!((cantor_ternary(2.0 / 3.0) - 0.5).abs() < 1e-15);
        assert!((cantor_ternary(0.5) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn staircase_self_similar(x in 0.0f64..1.0) {
            prop_assert!((cantor_ternary(x / 3.0) - cantor_ternary(x) / 2.0).abs() < 1e-9);
            prop_assert!((cantor_ternary(1.0 - x) - (1.0 - cantor_ternary(x))).abs() < 1e-9);
        }

        #[test]
        fn staircase_monotone(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            prop_assert!(cantor_ternary(lo) <= cantor_ternary(hi) + 1e-12);
        }
    }

    #[test]
    fn exact_powers_give_dyadic_mass() {
        let mut r = rng::stream(21, 0);
        for _ in 0..50 {
            let z = CantorPoint::random(&mut r, 64);
            for n in 0..20 {
                let rad = 3f64.powi(-(n + 1));
                let mu = cantor_ball_measure(&z, rad).unwrap().mu;
                assert!(
                    (mu - 0.5f64.powi(n + 1)).abs() < 1e-12 * mu,
                    "n={n} mu={mu}"
                );
            }
        }
    }

    #[test]
    fn saturation_and_errors() {
        let z = CantorPoint::default();
        assert_eq!(cantor_ball_measure(&z, 1.0).unwrap().mu, 1.0);
        assert_eq!(cantor_ball_measure(&z, 7.0).unwrap().mu, 1.0);
        assert!(cantor_ball_measure(&z, 0.0).is_err());
        let shallow = CantorPoint::from_digits(vec![0, 2, 0, 2]).unwrap();
        assert!(matches!(
            cantor_ball_measure(&shallow, 1e-4),
            Err(Error::BelowResolution { .. })
        ));
    }

    #[test]
    fn matches_cylinder_enumeration() {
        let mut r = rng::stream(22, 0);
        for _ in 0..500 {
            let z = CantorPoint::random(&mut r, 64);
            let rad = 10f64.powf(-r.random_range(0.0..8.0));
            let mu = cantor_ball_measure(&z, rad).unwrap().mu;
            let brute = cylinder_measure(z.value(), rad, 30);
            assert!(
                (mu - brute).abs() < 2f64.powi(-28),
                "r={rad} {mu} vs {brute}"
            );
        }
    }

    #[test]
    fn endpoint_configuration_has_flat_ratio() {
        // ζ at the far end of a right-child cylinder, one cylinder width from x_e
        for n in 0..10usize {
            let mut digits = vec![0u8; 64];
            digits[n] = 2;
            for d in digits.iter_mut().skip(n + 1) {
                *d = 2;
            }
            let z = CantorPoint::from_digits(digits).unwrap();
            let rad = 2.0 * 3f64.powi(-(n as i32 + 1));
            let ratio = cantor_ratio(&z, rad, 0.5).unwrap();
            assert!((ratio - 1.0).abs() < 1e-9, "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn third_ratio_is_half_at_shift_fixed_points() {
        let zero = CantorPoint::from_digits(vec![0; 64]).unwrap();
        let one = CantorPoint::from_digits(vec![2; 64]).unwrap();
        let mut r = rng::stream(23, 0);
        for _ in 0..100 {
            let rad = 10f64.powf(-r.random_range(0.0..8.0));
            for z in [&zero, &one] {
                let ratio = cantor_ratio(z, rad, 1.0 / 3.0).unwrap();
                assert!((ratio - 0.5).abs() < 1e-9, "r={rad} ratio={ratio}");
            }
        }
    }

    #[test]
    fn third_ratio_is_not_universal() {
        // ζ = 2/3 = 0.2000…₃ at r = 1/2: μ(B_r) = 3/4 but μ(B_{r/3}) = 1/4.
        let mut digits = vec![0u8; 64];
        digits[0] = 2;
        let z = CantorPoint::from_digits(digits).unwrap();
        let big = cantor_ball_measure(&z, 0.5).unwrap().mu;
        let small = cantor_ball_measure(&z, 0.5 / 3.0).unwrap().mu;
        assert!((big - cylinder_measure(z.value(), 0.5, 30)).abs() < 1e-8);
        assert!((small - cylinder_measure(z.value(), 0.5 / 3.0, 30)).abs() < 1e-8);
        assert!((big - 0.75).abs() < 1e-12 && (small - 0.25).abs() < 1e-12);
        assert!((cantor_ratio(&z, 0.5, 1.0 / 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_identity_and_bounds() {
        let mut r = rng::stream(24, 0);
        for _ in 0..200 {
            let z = CantorPoint::random(&mut r, 64);
            let rad = 10f64.powf(-r.random_range(0.0..6.0));
            assert_eq!(cantor_ratio(&z, rad, 1.0).unwrap(), 1.0);
            let b = r.random_range(0.01..1.0);
            let q = cantor_ratio(&z, rad, b).unwrap();
            assert!(q > 0.0 && q <= 1.0);
        }
        assert!(cantor_ratio(&CantorPoint::default(), 0.5, 0.0).is_err());
    }

    #[test]
    fn measure_monotone_and_flat_across_gaps() {
        let mut r = rng::stream(25, 0);
        let z = CantorPoint::random(&mut r, 64);
        let grid: Vec<f64> = (0..4000)
            .map(|i| 10f64.powf(-6.0 + 6.0 * i as f64 / 4000.0))
            .collect();
        let mus: Vec<f64> = grid
            .iter()
            .map(|&x| cantor_ball_measure(&z, x).unwrap().mu)
            .collect();
        assert!(mus.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        let flat = mus.windows(2).filter(|w| w[0] == w[1]).count();
        assert!(flat > 100, "only {flat} flat steps");
    }
}
