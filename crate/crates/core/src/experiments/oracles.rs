//! Standalone runs of the exact Cantor and semi-analytic solenoid measures.

use rand::Rng;

use super::output::{AnalyticRow, CantorOracleRow, RunOutput};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimators::stats::{linear_fit, local_maxima};
use crate::measures::{
    cantor_ball_measure, cantor_ratio, solenoid_ball_measure, solenoid_dimension, CantorPoint,
    MeasureForm, SolenoidQuery,
};
use crate::rng::{self, streams};
use crate::systems::DEFAULT_SYMBOL_DEPTH;

const SOLENOID_LOG10_R: (f64, f64, usize) = (-17.0, -1.0, 1601);
const CANTOR_LOG10_R: (f64, f64, usize) = (-12.0, -0.5, 231);

/// Ball measure and ratio `μ(B_{br})/μ(B_r)` along a radius grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SolenoidCurve {
    pub log10_r: Vec<f64>,
    pub mu: Vec<f64>,
    pub ratio: Vec<f64>,
}

impl SolenoidCurve {
    pub fn rows(&self) -> Vec<AnalyticRow> {
        (0..self.log10_r.len())
            .map(|i| AnalyticRow {
                log10_r: self.log10_r[i],
                mu: self.mu[i],
                r_half: self.ratio[i],
            })
            .collect()
    }
}

pub fn solenoid_curve(q: &SolenoidQuery, log10_r: &[f64], b: f64) -> Result<SolenoidCurve> {
    let mut mu = Vec::with_capacity(log10_r.len());
    let mut ratio = Vec::with_capacity(log10_r.len());
    for &l in log10_r {
        let r = 10f64.powf(l);
        let m = solenoid_ball_measure(&q.with_radius(r))?.mu;
        let inner = solenoid_ball_measure(&q.with_radius(b * r))?.mu;
        mu.push(m);
        ratio.push(inner / m);
    }
    Ok(SolenoidCurve {
        log10_r: log10_r.to_vec(),
        mu,
        ratio,
    })
}

/// Least-squares slope of `log10 μ` against `log10 r`.
pub fn solenoid_slope(c: &SolenoidCurve) -> Result<f64> {
    let y: Vec<f64> = c.mu.iter().map(|m| m.log10()).collect();
    linear_fit(&c.log10_r, &y)
        .map(|f| f.slope)
        .ok_or_else(|| Error::InsufficientData("slope needs two distinct radii".into()))
}

/// Geometric spacing `r_{n+1}/r_n` of the kinks, read off the local maxima
/// of the ratio by a linear fit of their `log10 r` against their rank.
pub fn solenoid_kink_ratio(c: &SolenoidCurve) -> Result<f64> {
    let peaks = local_maxima(&c.ratio);
    if peaks.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} kinks found, need 3",
            peaks.len()
        )));
    }
    let rank: Vec<f64> = (0..peaks.len()).map(|i| i as f64).collect();
    let at: Vec<f64> = peaks.iter().map(|&i| c.log10_r[i]).collect();
    let fit = linear_fit(&rank, &at).ok_or_else(|| Error::Degenerate("kinks coincide".into()))?;
    Ok(10f64.powf(-fit.slope.abs()))
}

fn grid(cfg: &ExperimentConfig, default: (f64, f64, usize)) -> Vec<f64> {
    let lo = cfg.log10_r_min.unwrap_or(default.0);
    let hi = cfg.log10_r_max.unwrap_or(default.1);
    let n = cfg.n_radii.unwrap_or(default.2).max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Measure, slope and kinks around a random point of the depth-`k` section.
pub(crate) fn run_solenoid_measure(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let a = cfg.spec()?.param("a")?;
    let mut r = rng::stream(cfg.seed, streams::REFERENCE);
    let phi = r.random_range(0.0..std::f64::consts::TAU);
    let gamma = (0..cfg.branch_depth).map(|_| r.random::<bool>()).collect();
    let mut q = SolenoidQuery::new(cfg.branch_depth, a, phi, gamma, 1.0)?;
    if cfg.printed_form {
        q.form = MeasureForm::Printed;
    }
    let curve = solenoid_curve(&q, &grid(cfg, SOLENOID_LOG10_R), cfg.b)?;
    let mut out = RunOutput::default();
    out.push("analytic", &curve.rows());
    out.set("slope", solenoid_slope(&curve)?);
    out.set("dimension", solenoid_dimension(a)?);
    match solenoid_kink_ratio(&curve) {
        Ok(k) => out.set("kink_ratio", k),
        Err(e) => out.notes.push(format!("kink ratio unavailable: {e}")),
    }
    out.set("a", a);
    Ok(out)
}

pub fn cantor_oracle_table(
    zeta: &CantorPoint,
    log10_r: &[f64],
    b: f64,
) -> Result<Vec<CantorOracleRow>> {
    log10_r
        .iter()
        .map(|&l| {
            let r = 10f64.powf(l);
            Ok(CantorOracleRow {
                r,
                mu: cantor_ball_measure(zeta, r)?.mu,
                ratio: cantor_ratio(zeta, r, b)?,
            })
        })
        .collect()
}

/// Exact measure and ratio around a Bernoulli-random point of the Cantor set.
pub(crate) fn run_cantor_oracle(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut r = rng::stream(cfg.seed, streams::REFERENCE);
    let zeta = CantorPoint::random(&mut r, DEFAULT_SYMBOL_DEPTH);
    let rows = cantor_oracle_table(&zeta, &grid(cfg, CANTOR_LOG10_R), cfg.b)?;
    let mut out = RunOutput::default();
    out.push("oracle", &rows);
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), row| {
            (lo.min(row.ratio), hi.max(row.ratio))
        });
    out.set("zeta", zeta.value());
    out.set("ratio_min", lo);
    out.set("ratio_max", hi);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Experiment;

    #[test]
    fn solenoid_slope_matches_dimension() {
        let mut r = rng::stream(91, 0);
        let gamma = (0..30).map(|_| r.random::<bool>()).collect();
        let q = SolenoidQuery::new(30, 0.076, 1.0, gamma, 1.0).unwrap();
        let g: Vec<f64> = (0..=160).map(|i| -17.0 + 0.1 * i as f64).collect();
        let c = solenoid_curve(&q, &g, 0.5).unwrap();
        let s = solenoid_slope(&c).unwrap();
        assert!((s - solenoid_dimension(0.076).unwrap()).abs() < 0.01, "{s}");
        let k = solenoid_kink_ratio(&c).unwrap();
        assert!((k / 0.076 - 1.0).abs() < 0.1, "{k}");
    }

    #[test]
    fn cantor_oracle_run_covers_the_grid() {
        let cfg = ExperimentConfig {
            experiment: Experiment::CantorOracle,
            system: "cantor-shift".into(),
            n_radii: Some(50),
            ..ExperimentConfig::default()
        };
        let out = run_cantor_oracle(&cfg).unwrap();
        assert_eq!(out.table("oracle").unwrap().rows, 50);
        assert!(out.summary["ratio_min"] >= 0.0 && out.summary["ratio_max"] <= 1.0);
    }

    #[test]
    fn too_few_kinks_is_an_error() {
        let c = SolenoidCurve {
            log10_r: vec![0.0, 1.0, 2.0],
            mu: vec![1.0; 3],
            ratio: vec![0.5; 3],
        };
        assert!(solenoid_kink_ratio(&c).is_err());
    }
}
