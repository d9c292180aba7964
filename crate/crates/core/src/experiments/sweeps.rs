//! Extremal-index sweeps over sampling step and series length, and the
//! i.i.d. against max-pair comparison.

use rayon::prelude::*;

use super::flows::{flow_pairs, with_flow, FlowVisitor};
use super::output::{EiRow, IidRow, RunOutput};
use super::{ExperimentConfig, QuantileMode};
use crate::error::{Error, Result};
use crate::estimators::stats::{
    ks_one_sample, ks_two_sample, ks_two_sample_critical, mean_std, spearman,
};
use crate::estimators::{
    ebd_fit, suveges_theta, synthetic_max_pair, ExceedanceIndexSeries, ExcessSample,
};
use crate::systems::{SegmentStream, VectorField};

const DEFAULT_IID_SAMPLES: usize = 100_000;

/// One sampled series: step `dt` over a length `t_len`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Setting {
    dt: f64,
    t_len: f64,
}

/// `X_j = −log‖y(j dt) − ζ‖` for `j < round(t_len/dt)`, integrating with
/// the largest step not above `max_step` that divides `dt`.
fn sample_series<F: VectorField<D>, const D: usize>(
    field: &F,
    zeta: &[f64; D],
    y0: [f64; D],
    s: Setting,
    max_step: f64,
) -> Result<Vec<f64>> {
    let n = (s.t_len / s.dt).round() as usize;
    let sub = (s.dt / max_step).ceil().max(1.0) as usize;
    let mut stream = SegmentStream::new(field, y0, 0.0, s.dt / sub as f64, None)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let y = stream.state();
        let d = y
            .iter()
            .zip(zeta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        out.push(-d.ln());
        stream.skip_steps(sub)?;
    }
    Ok(out)
}

/// `θ̂` per quantile policy from one series.
fn thetas(x: &[f64], dt: f64, fixed_q: f64, modes: &[QuantileMode]) -> Vec<Option<f64>> {
    modes
        .iter()
        .map(|m| {
            let q = m.quantile(fixed_q, x.len());
            let e = ExceedanceIndexSeries::from_series(x, q, dt).ok()?;
            suveges_theta(&e, q).ok().map(|t| t.value)
        })
        .collect()
}

struct SweepVisitor<'a> {
    cfg: &'a ExperimentConfig,
    settings: &'a [Setting],
}

impl FlowVisitor for SweepVisitor<'_> {
    /// `[member][setting][policy]`, `None` where the estimate failed.
    type Output = Vec<Vec<Vec<Option<f64>>>>;

    fn visit<F: VectorField<D>, const D: usize>(
        self,
        field: &F,
        start: [f64; D],
    ) -> Result<Self::Output> {
        let cfg = self.cfg;
        let pairs = flow_pairs(field, start, cfg, cfg.n_refs)?;
        Ok(pairs
            .par_iter()
            .map(|(zeta, y0)| {
                self.settings
                    .iter()
                    .map(
                        |&s| match sample_series(field, zeta, *y0, s, cfg.max_step) {
                            Ok(x) => thetas(&x, s.dt, cfg.q, &cfg.q_modes),
                            Err(_) => vec![None; cfg.q_modes.len()],
                        },
                    )
                    .collect()
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EiSweep {
    /// Rows over the `dt` grid at `t_len`, then over the `t_len` grid at
    /// `dt_ref`, each once per quantile policy.
    pub rows: Vec<EiRow>,
    pub dt_rows: usize,
}

pub fn run_ei_sweep(cfg: &ExperimentConfig) -> Result<EiSweep> {
    cfg.validate()?;
    let mut settings: Vec<Setting> = cfg
        .dt_grid
        .iter()
        .map(|&dt| Setting {
            dt,
            t_len: cfg.t_len,
        })
        .collect();
    let dt_settings = settings.len();
    settings.extend(cfg.t_len_grid.iter().map(|&t_len| Setting {
        dt: cfg.dt_ref,
        t_len,
    }));
    let theta = with_flow(
        cfg,
        SweepVisitor {
            cfg,
            settings: &settings,
        },
    )?;
    let mut rows = Vec::new();
    for (si, s) in settings.iter().enumerate() {
        for (mi, mode) in cfg.q_modes.iter().enumerate() {
            let th: Vec<f64> = theta.iter().filter_map(|m| m[si][mi]).collect();
            let tc: Vec<f64> = th.iter().map(|t| s.dt / t).collect();
            let (theta_mean, theta_std) = mean_std(&th);
            let (tc_mean, tc_std) = mean_std(&tc);
            rows.push(EiRow {
                dt: s.dt,
                t_len: s.t_len,
                q_mode: mode.name().to_string(),
                q: mode.quantile(cfg.q, (s.t_len / s.dt).round() as usize),
                theta_mean,
                theta_std,
                tc_mean,
                tc_std,
                n_refs: th.len(),
            });
        }
    }
    Ok(EiSweep {
        rows,
        dt_rows: dt_settings * cfg.q_modes.len(),
    })
}

/// `(max − min)/mean`.
fn relative_variation(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    (hi - lo) / mean_std(v).0
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

impl EiSweep {
    fn series(&self, dt_part: bool, mode: &str) -> Vec<&EiRow> {
        let (a, b) = self.rows.split_at(self.dt_rows);
        let part = if dt_part { a } else { b };
        part.iter().filter(|r| r.q_mode == mode).collect()
    }

    pub fn output(&self, cfg: &ExperimentConfig) -> RunOutput {
        let mut out = RunOutput::default();
        out.push("ei", &self.rows);
        for mode in &cfg.q_modes {
            let m = mode.name();
            let by_dt = self.series(true, m);
            let dt: Vec<f64> = by_dt.iter().map(|r| r.dt).collect();
            let th: Vec<f64> = by_dt.iter().map(|r| r.theta_mean).collect();
            let tc: Vec<f64> = by_dt.iter().map(|r| r.tc_mean).collect();
            out.set(&format!("{m}_theta_dt_spearman"), spearman(&dt, &th));
            out.set(&format!("{m}_tc_dt_spearman"), spearman(&dt, &tc));
            let by_len = self.series(false, m);
            let len: Vec<f64> = by_len.iter().map(|r| r.t_len).collect();
            let th: Vec<f64> = by_len.iter().map(|r| r.theta_mean).collect();
            let tc: Vec<f64> = by_len.iter().map(|r| r.tc_mean).collect();
            out.set(&format!("{m}_theta_tlen_spearman"), spearman(&len, &th));
            out.set(&format!("{m}_theta_tlen_relvar"), relative_variation(&th));
            out.set(
                &format!("{m}_theta_tlen_increasing"),
                strictly_increasing(&th) as u8 as f64,
            );
            out.set(&format!("{m}_tc_tlen_spearman"), spearman(&len, &tc));
            out.set(&format!("{m}_tc_tlen_relvar"), relative_variation(&tc));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IidDemo {
    pub rows: Vec<IidRow>,
    pub n: usize,
    /// KS distance of `U` from `F_V²`.
    pub ks_u: f64,
    /// Two-sample KS distance between the excesses of `V` and `U`.
    pub ks_excess: f64,
    pub ks_excess_critical: f64,
}

fn iid_row(name: &str, x: &[f64], q: f64) -> Result<(IidRow, Vec<f64>)> {
    let s = ExcessSample::from_values(x, q)?;
    let fit = ebd_fit(&s)?;
    let theta = suveges_theta(&ExceedanceIndexSeries::from_series(x, q, 1.0)?, q)?;
    let row = IidRow {
        series: name.to_string(),
        excess_rate: fit.value,
        excess_stderr: fit.stderr.unwrap_or(f64::NAN),
        n_excess: s.len(),
        theta: theta.value,
        theta_flagged: theta.flagged,
    };
    Ok((row, s.excesses))
}

/// Exponential `V_i` and `U_i = max(V_{i−1}, V_i)`: same excess law, extremal
/// indices 1 and 1/2.
pub fn run_iid_demo(cfg: &ExperimentConfig) -> Result<IidDemo> {
    cfg.validate()?;
    let n = cfg.samples.unwrap_or(DEFAULT_IID_SAMPLES);
    let s = synthetic_max_pair(n, cfg.lambda, cfg.seed)?;
    let (v, ev) = iid_row("V", &s.v, cfg.q)?;
    let (u, eu) = iid_row("U", &s.u, cfg.q)?;
    let lambda = cfg.lambda;
    let ks_u = ks_one_sample(&s.u, |y| (1.0 - (-y / lambda).exp()).max(0.0).powi(2));
    if ev.is_empty() || eu.is_empty() {
        return Err(Error::InsufficientData("no excesses".into()));
    }
    Ok(IidDemo {
        ks_excess: ks_two_sample(&ev, &eu),
        ks_excess_critical: ks_two_sample_critical(ev.len(), eu.len()),
        rows: vec![v, u],
        n,
        ks_u,
    })
}

impl IidDemo {
    /// `|Δ̂_V − Δ̂_U|` in units of the combined standard error.
    pub fn rate_z(&self) -> f64 {
        let (v, u) = (&self.rows[0], &self.rows[1]);
        (v.excess_rate - u.excess_rate).abs() / v.excess_stderr.hypot(u.excess_stderr)
    }

    pub fn output(&self, _cfg: &ExperimentConfig) -> RunOutput {
        let mut out = RunOutput::default();
        out.push("iid", &self.rows);
        out.set("rate_z", self.rate_z());
        out.set("theta_v", self.rows[0].theta);
        out.set("theta_u", self.rows[1].theta);
        out.set("ks_u", self.ks_u);
        out.set("ks_critical", 1.36 / (self.n as f64).sqrt());
        out.set("ks_excess", self.ks_excess);
        out.set("ks_excess_critical", self.ks_excess_critical);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Experiment;
    use crate::systems::HarmonicOscillator;

    #[test]
    fn series_sampling_is_step_independent() {
        let f = HarmonicOscillator { omega: 1.0 };
        let s = Setting {
            dt: 0.1,
            t_len: 10.0,
        };
        let a = sample_series(&f, &[0.0, 0.0], [1.0, 0.0], s, 0.01).unwrap();
        let b = sample_series(&f, &[0.0, 0.0], [1.0, 0.0], s, 0.05).unwrap();
        assert_eq!(a.len(), 100);
        for (x, y) in a.iter().zip(&b) {
            // unit circle: distance to the origin stays 1
            assert!(x.abs() < 1e-6 && (x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn iid_demo_separates_the_indices() {
        let cfg = ExperimentConfig {
            experiment: Experiment::IidDemo,
            ..ExperimentConfig::default()
        };
        let d = run_iid_demo(&cfg).unwrap();
        assert!((d.rows[0].theta - 1.0).abs() < 0.05);
        assert!((d.rows[1].theta - 0.5).abs() < 0.05);
        assert!(d.rate_z() < 3.0);
        assert!(d.ks_u < 1.36 / (d.n as f64).sqrt());
    }

    #[test]
    fn small_sweep_has_every_row() {
        let cfg = ExperimentConfig {
            experiment: Experiment::EiSweep,
            system: "lorenz63".into(),
            n_refs: 2,
            dt_grid: vec![0.01, 0.05],
            t_len: 200.0,
            t_len_grid: vec![100.0, 200.0],
            burn_in_time: 10.0,
            ..ExperimentConfig::default()
        };
        let s = run_ei_sweep(&cfg).unwrap();
        assert_eq!(s.rows.len(), 8);
        assert_eq!(s.dt_rows, 4);
        assert!(s
            .rows
            .iter()
            .all(|r| r.theta_mean > 0.0 && r.theta_mean <= 1.0 && r.n_refs == 2));
        assert_eq!(s, run_ei_sweep(&cfg).unwrap());
        let out = s.output(&cfg);
        assert!(out.summary.contains_key("varying_theta_dt_spearman"));
    }
}
