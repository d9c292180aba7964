use super::stats::linear_fit;
use super::{EstimateKind, EstimateRecord};
use crate::error::{Error, Result};
use crate::systems::Metric;

const MIN_POINTS: usize = 100;
const MIN_WINDOW: usize = 5;
const MIN_R2: f64 = 0.99;

/// `S_C(ζ, ε)` for each `ε`: the fraction of distances strictly below `ε`.
pub fn correlation_sum(distances: &[f64], eps_grid: &[f64]) -> Vec<f64> {
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    eps_grid
        .iter()
        .map(|&e| sorted.partition_point(|&d| d < e) as f64 / n)
        .collect()
}

/// `n` log-spaced radii between the 10th smallest positive distance and the
/// largest one.
pub fn default_eps_grid(distances: &[f64], n: usize) -> Vec<f64> {
    let mut pos: Vec<f64> = distances.iter().copied().filter(|&d| d > 0.0).collect();
    if pos.is_empty() || n < 2 {
        return Vec::new();
    }
    pos.sort_by(f64::total_cmp);
    let lo = pos[(MIN_POINTS / 10).min(pos.len() - 1)];
    let hi = pos[pos.len() - 1];
    if !(hi > lo) {
        return vec![hi; n];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Slope of `log S_C` against `log ε` over the longest contiguous window of
/// at least five grid points whose fit has `R² ≥ 0.99`; equal lengths prefer
/// the smaller radii. Without a qualifying window the best-`R²` minimal
/// window is used and the record is flagged.
pub fn correlation_dimension<P: Metric>(
    points: &[P],
    zeta: &P,
    eps_grid: &[f64],
) -> Result<EstimateRecord> {
    let d: Vec<f64> = points.iter().map(|p| p.distance(zeta)).collect();
    correlation_dimension_from_distances(&d, eps_grid)
}

pub(crate) fn correlation_dimension_from_distances(
    distances: &[f64],
    eps_grid: &[f64],
) -> Result<EstimateRecord> {
    if distances.len() < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least {MIN_POINTS}",
            distances.len()
        )));
    }
    if eps_grid.len() < MIN_WINDOW {
        return Err(Error::InvalidInput(format!(
            "eps grid has {} radii, need at least {MIN_WINDOW}",
            eps_grid.len()
        )));
    }
    let sums = correlation_sum(distances, eps_grid);
    let pts: Vec<(f64, f64)> = eps_grid
        .iter()
        .zip(&sums)
        .filter(|(&e, &s)| e > 0.0 && s > 0.0)
        .map(|(&e, &s)| (e.ln(), s.ln()))
        .collect();
    let n = distances.len();
    let flagged_zero = |len: usize| {
        let mut rec = EstimateRecord::new(EstimateKind::Correlation, 0.0, n)
            .with_param("window_len", len as f64);
        rec.flagged = true;
        rec
    };
    if pts.len() < MIN_WINDOW {
        return Ok(flagged_zero(pts.len()));
    }
    let (mut best, mut fallback): (
        Option<(usize, usize, f64, f64)>,
        Option<(usize, usize, f64, f64)>,
    ) = (None, None);
    for len in (MIN_WINDOW..=pts.len()).rev() {
        for start in 0..=pts.len() - len {
            let (x, y): (Vec<f64>, Vec<f64>) = pts[start..start + len].iter().copied().unzip();
            let Some(fit) = linear_fit(&x, &y) else {
                continue;
            };
            if !fit.r2.is_finite() {
                continue;
            }
            if len == MIN_WINDOW && fallback.is_none_or(|f| fit.r2 > f.3) {
                fallback = Some((start, len, fit.slope, fit.r2));
            }
            if best.is_none() && fit.r2 >= MIN_R2 {
                best = Some((start, len, fit.slope, fit.r2));
            }
        }
        if best.is_some() {
            break;
        }
    }
    let (chosen, flagged) = match (best, fallback) {
        (Some(b), _) => (b, false),
        (None, Some(f)) => (f, true),
        (None, None) => return Ok(flagged_zero(pts.len())),
    };
    let (start, len, slope, r2) = chosen;
    let mut rec = EstimateRecord::new(EstimateKind::Correlation, slope.max(0.0), n)
        .with_param("eps_lo", pts[start].0.exp())
        .with_param("eps_hi", pts[start + len - 1].0.exp())
        .with_param("window_len", len as f64)
        .with_param("r2", r2);
    rec.flagged = flagged;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn strict_inequality_in_sum() {
        let s = correlation_sum(&[0.1, 0.2, 0.3, 0.4], &[0.1, 0.25, 1.0]);
        assert_eq!(s, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn unit_interval() {
        let mut r = rng::stream(61, 0);
        let pts: Vec<[f64; 1]> = (0..100_000).map(|_| [r.random::<f64>()]).collect();
        let zeta = [0.5];
        let d: Vec<f64> = pts.iter().map(|p| p.distance(&zeta)).collect();
        let grid = default_eps_grid(&d, 30);
        let e = correlation_dimension(&pts, &zeta, &grid).unwrap();
        assert!(!e.flagged);
        assert!((e.value - 1.0).abs() < 0.05, "{}", e.value);
    }

    #[test]
    fn unit_square() {
        let mut r = rng::stream(62, 0);
        let pts: Vec<[f64; 2]> = (0..100_000)
            .map(|_| [r.random::<f64>(), r.random::<f64>()])
            .collect();
        let zeta = [0.5, 0.5];
        let d: Vec<f64> = pts.iter().map(|p| p.distance(&zeta)).collect();
        let grid = default_eps_grid(&d, 30);
        let e = correlation_dimension(&pts, &zeta, &grid).unwrap();
        assert!((e.value - 2.0).abs() < 0.1, "{}", e.value);
    }

    #[test]
    fn identical_points_are_flagged() {
        let pts = vec![[0.3, 0.3]; 200];
        let grid: Vec<f64> = (0..20).map(|i| 10f64.powf(-3.0 + 0.1 * i as f64)).collect();
        let e = correlation_dimension(&pts, &[0.0, 0.0], &grid).unwrap();
        assert!(e.flagged);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![[0.3]; 10];
        assert!(correlation_dimension(&pts, &[0.0], &[0.1, 0.2, 0.3, 0.4, 0.5]).is_err());
    }
}
