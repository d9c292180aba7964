//! Pipelines for the maps: Cantor shift, fat Cantor, Hénon and solenoid.

use rand::seq::SliceRandom;
use rand::Rng;

use super::output::{AnalyticRow, HistRow, OracleRow, RunOutput, SnapshotRow, ZoomRow};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimators::stats::{mean_std, pearson};
use crate::estimators::{ebd_fit, excesses_at_radius, EstimateRecord};
use crate::measures::{
    cantor_ball_measure, closest_branch, solenoid_ball_measure, CantorPoint, MeasureForm,
    SolenoidQuery,
};
use crate::recurrence::{
    ensemble_zoom, orbit_zoom_traces, point_set_zoom, zoom_trace, zoom_trace_and_buffer,
    zoom_trace_with_balls, Checkpoint, Ensemble, ZoomConfig, ZoomTrace,
};
use crate::rng::{self, streams, Rng as ChaCha};
use crate::systems::{
    fat_cantor_sample, CantorShift, DiscreteSystem, FatCantorMode, Henon, Metric, Solenoid,
    SolenoidState, SymbolicState,
};

/// Orbit steps between consecutive reference points of the pilot orbit.
const PILOT_STRIDE: u64 = 1000;
/// Size of the perturbation applied to a pilot point to start a member.
const PERTURBATION: f64 = 1e-6;
const SNAPSHOTS: usize = 4;

pub(crate) fn zoom_config(cfg: &ExperimentConfig) -> ZoomConfig {
    ZoomConfig {
        k: cfg.k,
        iters: cfg.iters,
        burn_in: cfg.burn_in,
        checkpoints: cfg.checkpoints,
        b: cfg.b,
    }
}

fn member_rng(cfg: &ExperimentConfig, i: usize) -> ChaCha {
    rng::stream(cfg.seed, streams::MEMBER_BASE + i as u64)
}

/// `(ζ, x0)` per member: `ζ` is the pilot orbit at stride `PILOT_STRIDE`,
/// `x0` the pilot point half a stride later, perturbed.
fn pilot_pairs<S: DiscreteSystem>(
    sys: &S,
    start: S::State,
    cfg: &ExperimentConfig,
    n: usize,
    perturb: impl Fn(&S::State, &mut ChaCha) -> S::State,
) -> Result<Vec<(S::Point, S::State)>> {
    let mut x = start;
    for _ in 0..cfg.burn_in {
        x = sys.step(&x)?;
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        for _ in 0..PILOT_STRIDE / 2 {
            x = sys.step(&x)?;
        }
        let zeta = sys.embed(&x);
        for _ in 0..PILOT_STRIDE / 2 {
            x = sys.step(&x)?;
        }
        out.push((zeta, perturb(&x, &mut member_rng(cfg, i))));
    }
    Ok(out)
}

fn final_values(e: &Ensemble, f: impl Fn(&ZoomTrace) -> f64) -> Vec<f64> {
    e.traces
        .iter()
        .filter(|(i, _)| !e.excluded.contains(i))
        .map(|(_, t)| f(t))
        .filter(|v| v.is_finite())
        .collect()
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Headline statistics of an ensemble: final-checkpoint dimensions and
/// ratios over the complete members.
pub(crate) fn summarize_ensemble(out: &mut RunOutput, prefix: &str, e: &Ensemble, offset: f64) {
    let ebd = final_values(e, |t| t.last().map_or(f64::NAN, |c| c.ebd_dim + offset));
    let corr = final_values(e, |t| t.last().map_or(f64::NAN, |c| c.corr_dim + offset));
    let rh = final_values(e, |t| t.last().map_or(f64::NAN, |c| c.r_half));
    let (m, s) = mean_std(&ebd);
    out.set(&format!("{prefix}_mean_ebd"), m);
    out.set(&format!("{prefix}_std_ebd"), s);
    out.set(
        &format!("{prefix}_stderr_ebd"),
        s / (ebd.len() as f64).sqrt(),
    );
    out.set(&format!("{prefix}_median_ebd"), median(&ebd));
    out.set(&format!("{prefix}_mean_corr"), mean_std(&corr).0);
    out.set(&format!("{prefix}_mean_r_half"), mean_std(&rh).0);
    out.set(
        &format!("{prefix}_members"),
        (e.traces.len() - (e.excluded.len() - e.failed.len())) as f64,
    );
    out.set(&format!("{prefix}_excluded"), e.excluded.len() as f64);
    for (i, why) in &e.failed {
        out.notes.push(format!("{prefix} member {i} failed: {why}"));
    }
}

pub(crate) fn ensemble_rows(e: &Ensemble, offset: f64) -> Vec<ZoomRow> {
    e.traces
        .iter()
        .flat_map(|(i, t)| ZoomRow::from_trace(*i, t, offset))
        .collect()
}

fn trace_summary(out: &mut RunOutput, t: &ZoomTrace, offset: f64) {
    if let Some(c) = t.last() {
        out.set("final_r", c.r);
        out.set("final_r_half", c.r_half);
        out.set("final_ebd", c.ebd_dim + offset);
        out.set("final_corr", c.corr_dim + offset);
    }
    out.set("checkpoints", t.checkpoints.len() as f64);
    out.set("partial", if t.partial { 1.0 } else { 0.0 });
    out.set("zero_hits", t.zero_hits as f64);
}

/// Spread `max − min` of `R_half` over checkpoints within `decades` of the
/// final radius.
pub fn r_half_spread(t: &ZoomTrace, decades: f64) -> f64 {
    let Some(last) = t.last() else {
        return f64::NAN;
    };
    let cut = last.r.log10() + decades;
    let v: Vec<f64> = t
        .checkpoints
        .iter()
        .filter(|c| c.r.log10() <= cut)
        .map(|c| c.r_half)
        .collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Mean of `f` over checkpoints within `decades` of the final radius.
pub fn tail_mean(t: &ZoomTrace, decades: f64, f: impl Fn(&Checkpoint) -> f64) -> f64 {
    let Some(last) = t.last() else {
        return f64::NAN;
    };
    let cut = last.r.log10() + decades;
    let v: Vec<f64> = t
        .checkpoints
        .iter()
        .filter(|c| c.r.log10() <= cut)
        .map(f)
        .collect();
    mean_std(&v).0
}

/// Indices of the checkpoints closest, in `log r`, to the quarter points of
/// the trace's span (`1/4, 1/2, 3/4` and the end).
pub fn snapshot_indices(t: &ZoomTrace) -> Vec<usize> {
    let lr: Vec<f64> = t.checkpoints.iter().map(|c| c.r.log10()).collect();
    let (Some(&first), Some(&last)) = (lr.first(), lr.last()) else {
        return Vec::new();
    };
    let mut out: Vec<usize> = (1..=SNAPSHOTS)
        .map(|j| {
            let target = first + (last - first) * j as f64 / SNAPSHOTS as f64;
            (0..lr.len())
                .min_by(|&a, &b| (lr[a] - target).abs().total_cmp(&(lr[b] - target).abs()))
                .expect("non-empty")
        })
        .collect();
    out.dedup();
    out
}

/// Empirical against exact ball measure along a Cantor zoom.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheck {
    pub rows: Vec<OracleRow>,
    pub max_abs_z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CantorZoom {
    pub zeta: CantorPoint,
    pub trace: ZoomTrace,
    pub fit: EstimateRecord,
    pub histogram: Vec<HistRow>,
    pub oracle: OracleCheck,
}

fn excess_histogram(excesses: &[f64], rate: f64, bins: usize) -> Vec<HistRow> {
    let hi = excesses.iter().copied().fold(0.0, f64::max);
    if !(hi > 0.0) {
        return Vec::new();
    }
    let w = hi / bins as f64;
    let mut counts = vec![0usize; bins];
    for &u in excesses {
        counts[((u / w) as usize).min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let (l, r) = (i as f64 * w, (i + 1) as f64 * w);
            HistRow {
                bin_left: l,
                bin_right: r,
                count,
                fit_density: rate * (-rate * 0.5 * (l + r)).exp(),
            }
        })
        .collect()
}

/// Cantor shift orbit of Bernoulli digits zooming on a Bernoulli-random
/// reference point, with the excess histogram of the final ball and the
/// exact-measure cross-check at every checkpoint.
pub fn run_cantor_zoom(cfg: &ExperimentConfig) -> Result<CantorZoom> {
    cfg.validate()?;
    let depth = cfg.spec()?.param("depth")? as usize;
    let zeta = CantorPoint::random(&mut rng::stream(cfg.seed, streams::REFERENCE), depth);
    let shifts = (cfg.burn_in + cfg.iters) as usize;
    let x0 = SymbolicState::bernoulli(&mut rng::stream(cfg.seed, streams::SYMBOLS), depth, shifts)?;
    let (trace, buf) = zoom_trace_and_buffer(&CantorShift, &[zeta.value()], x0, &zoom_config(cfg))?;
    if trace.partial {
        return Err(Error::InsufficientData(format!(
            "only {} of {} recurrences seen",
            buf.len(),
            cfg.k
        )));
    }
    let outer = if buf.outer_radius().is_finite() {
        buf.outer_radius()
    } else {
        buf.radius()
    };
    let sample = excesses_at_radius(&buf.distances(), outer)?;
    let fit = ebd_fit(&sample)?;
    let histogram = excess_histogram(&sample.excesses, fit.value, cfg.hist_bins);
    let mut rows = Vec::new();
    for (i, c) in trace.checkpoints.iter().enumerate() {
        let exact = cantor_ball_measure(&zeta, c.r)?.mu;
        let emp = cfg.k as f64 / c.iters as f64;
        let se = (exact * (1.0 - exact) / c.iters as f64).sqrt();
        rows.push(OracleRow {
            checkpoint: i,
            r: c.r,
            mu_empirical: emp,
            mu_exact: exact,
            z: (emp - exact) / se,
        });
    }
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(CantorZoom {
        zeta,
        trace,
        fit,
        histogram,
        oracle: OracleCheck { rows, max_abs_z },
    })
}

impl CantorZoom {
    pub fn output(&self, _cfg: &ExperimentConfig) -> RunOutput {
        let mut out = RunOutput::default();
        out.push("zoom", &ZoomRow::from_trace(0, &self.trace, 0.0));
        out.push("hist", &self.histogram);
        out.push("oracle", &self.oracle.rows);
        trace_summary(&mut out, &self.trace, 0.0);
        out.set("zeta", self.zeta.value());
        out.set("fit_rate", self.fit.value);
        out.set("fit_stderr", self.fit.stderr.unwrap_or(f64::NAN));
        out.set(
            "empty_bins",
            self.histogram.iter().filter(|h| h.count == 0).count() as f64,
        );
        out.set("r_half_spread_3_decades", r_half_spread(&self.trace, 3.0));
        out.set("oracle_max_abs_z", self.oracle.max_abs_z);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FatCantorZoom {
    pub zeta: f64,
    pub points: Vec<[f64; 1]>,
    pub trace: ZoomTrace,
}

fn fat_cantor_points(cfg: &ExperimentConfig) -> Result<(Vec<[f64; 1]>, u32, FatCantorMode)> {
    let depth = cfg.spec()?.param("depth")? as u32;
    let mode = if cfg.faithful {
        FatCantorMode::Faithful
    } else {
        FatCantorMode::Backward
    };
    let n = cfg.samples.unwrap_or(1_000_000);
    let pts = fat_cantor_sample(
        n,
        depth,
        mode,
        &mut rng::stream(cfg.seed, streams::SAMPLING),
    )?;
    Ok((pts.into_iter().map(|x| [x]).collect(), depth, mode))
}

fn fat_cantor_reference(rng: &mut ChaCha, depth: u32) -> Result<[f64; 1]> {
    Ok([fat_cantor_sample(1, depth, FatCantorMode::Backward, rng)?[0]])
}

/// Zoom on a sampled fat-Cantor point through a sampled point set.
pub fn run_fat_cantor_zoom(cfg: &ExperimentConfig) -> Result<FatCantorZoom> {
    cfg.validate()?;
    let (points, depth, _) = fat_cantor_points(cfg)?;
    let zeta = fat_cantor_reference(&mut rng::stream(cfg.seed, streams::REFERENCE), depth)?;
    let trace = point_set_zoom(&points, &zeta, &zoom_config(cfg))?;
    Ok(FatCantorZoom {
        zeta: zeta[0],
        points,
        trace,
    })
}

impl FatCantorZoom {
    /// Same zoom over a shuffled copy of the point set.
    pub fn shuffled_trace(&self, cfg: &ExperimentConfig) -> Result<ZoomTrace> {
        let mut pts = self.points.clone();
        pts.shuffle(&mut rng::stream(cfg.seed, streams::SHUFFLE));
        point_set_zoom(&pts, &[self.zeta], &zoom_config(cfg))
    }

    pub fn output(&self, cfg: &ExperimentConfig) -> RunOutput {
        let mut out = RunOutput::default();
        out.push("zoom", &ZoomRow::from_trace(0, &self.trace, 0.0));
        trace_summary(&mut out, &self.trace, 0.0);
        out.set("zeta", self.zeta);
        out.set("points", self.points.len() as f64);
        out.set(
            "survivor_fraction",
            self.points.len() as f64 / cfg.samples.unwrap_or(1_000_000) as f64,
        );
        out.set(
            "final_decade_mean_r_half",
            tail_mean(&self.trace, 1.0, |c| c.r_half),
        );
        out.set(
            "final_decade_mean_ebd",
            tail_mean(&self.trace, 1.0, |c| c.ebd_dim),
        );
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HenonRun {
    pub single: ZoomTrace,
    pub snapshots: Vec<SnapshotRow>,
    pub ensemble: Option<Ensemble>,
    /// One trace per reference taken on a single stored orbit.
    pub orbit: Option<Vec<ZoomTrace>>,
}

fn henon(cfg: &ExperimentConfig) -> Result<Henon> {
    let spec = cfg.spec()?;
    Ok(Henon {
        a: spec.param("a")?,
        b: spec.param("b")?,
    })
}

fn henon_pairs(cfg: &ExperimentConfig, sys: &Henon, n: usize) -> Result<Vec<([f64; 2], [f64; 2])>> {
    let mut p = rng::stream(cfg.seed, streams::PILOT);
    let start = [p.random_range(-0.1..0.1), p.random_range(-0.1..0.1)];
    pilot_pairs(sys, start, cfg, n, |x, r| {
        [
            x[0] + PERTURBATION * r.random_range(-1.0..1.0),
            x[1] + PERTURBATION * r.random_range(-1.0..1.0),
        ]
    })
}

/// Single reference zoom with ball snapshots; with `ensemble` also the
/// independent-reference ensemble and, if configured, the single-orbit
/// variant with references spread evenly along one stored orbit.
pub fn run_henon(cfg: &ExperimentConfig, ensemble: bool) -> Result<HenonRun> {
    cfg.validate()?;
    let sys = henon(cfg)?;
    let zc = zoom_config(cfg);
    let n = if ensemble { cfg.n_refs } else { 1 };
    let pairs = henon_pairs(cfg, &sys, n)?;
    let (single, balls) = zoom_trace_with_balls(&sys, &pairs[0].0, pairs[0].1, &zc)?;
    let snapshots = snapshot_indices(&single)
        .into_iter()
        .enumerate()
        .flat_map(|(s, i)| {
            let r = single.checkpoints[i].r;
            let zeta = pairs[0].0;
            balls[i]
                .iter()
                .map(move |p| SnapshotRow {
                    snapshot: s,
                    checkpoint: i,
                    r,
                    distance: p.distance(&zeta),
                    x: p[0],
                    y: p[1],
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut run = HenonRun {
        single,
        snapshots,
        ensemble: None,
        orbit: None,
    };
    if !ensemble {
        return Ok(run);
    }
    run.ensemble = Some(ensemble_zoom(cfg.n_refs, cfg.grid_step, 0.0, |i| {
        zoom_trace(&sys, &pairs[i].0, pairs[i].1, &zc)
    })?);
    if cfg.orbit_variant {
        let mut x = pairs[0].1;
        for _ in 0..cfg.burn_in {
            x = sys.step(&x)?;
        }
        let mut orbit = Vec::with_capacity(cfg.iters as usize);
        for _ in 0..cfg.iters {
            orbit.push(x);
            x = sys.step(&x)?;
        }
        let stride = orbit.len() / cfg.n_refs;
        let refs: Vec<usize> = (0..cfg.n_refs).map(|j| j * stride + stride / 2).collect();
        run.orbit = Some(orbit_zoom_traces(&orbit, &refs, cfg.window, &zc)?);
    }
    Ok(run)
}

impl HenonRun {
    pub fn output(&self, _cfg: &ExperimentConfig) -> RunOutput {
        let mut out = RunOutput::default();
        match &self.ensemble {
            Some(e) => {
                out.push("zoom", &ensemble_rows(e, 0.0));
                out.push("agg", &e.aggregate);
                summarize_ensemble(&mut out, "ensemble", e, 0.0);
            }
            None => out.push("zoom", &ZoomRow::from_trace(0, &self.single, 0.0)),
        }
        out.push("snapshots", &self.snapshots);
        trace_summary(&mut out, &self.single, 0.0);
        out.set("r_half_spread", r_half_spread(&self.single, f64::INFINITY));
        if let Some(orbit) = &self.orbit {
            let rows: Vec<ZoomRow> = orbit
                .iter()
                .enumerate()
                .flat_map(|(i, t)| ZoomRow::from_trace(i, t, 0.0))
                .collect();
            out.push("zoom_orbit", &rows);
            let e: Vec<f64> = orbit
                .iter()
                .filter_map(|t| t.last().map(|c| c.ebd_dim))
                .filter(|v| v.is_finite())
                .collect();
            let (m, s) = mean_std(&e);
            out.set("orbit_mean_ebd", m);
            out.set("orbit_std_ebd", s);
            out.set("orbit_stderr_ebd", s / (e.len() as f64).sqrt());
            out.set("orbit_median_ebd", median(&e));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolenoidRun {
    pub ensemble: Ensemble,
    /// Semi-analytic ratio averaged over the members' reference points, on
    /// the aggregate grid.
    pub analytic: Vec<AnalyticRow>,
    /// Pearson correlation of numeric and analytic mean ratios over the
    /// grid radii every complete member covers.
    pub correlation: f64,
    /// Mean per-radius spread of the members' ratios over the amplitude of
    /// the mean ratio, on the same radii.
    pub synchrony: f64,
}

fn solenoid(cfg: &ExperimentConfig) -> Result<Solenoid> {
    Solenoid::new(cfg.spec()?.param("a")?)
}

fn solenoid_pairs(
    cfg: &ExperimentConfig,
    sys: &Solenoid,
    n: usize,
) -> Result<Vec<([f64; 3], SolenoidState, SolenoidState)>> {
    let mut p = rng::stream(cfg.seed, streams::PILOT);
    let start = SolenoidState {
        phi: p.random_range(0.0..std::f64::consts::TAU),
        v: [0.0, 0.0],
    };
    // the member's own state at ζ is needed for the section angle and branch
    let mut x = start;
    for _ in 0..cfg.burn_in {
        x = sys.step(&x)?;
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        for _ in 0..PILOT_STRIDE {
            x = sys.step(&x)?;
        }
        let mut r = member_rng(cfg, i);
        let x0 = SolenoidState {
            phi: r.random_range(0.0..std::f64::consts::TAU),
            v: [0.0, 0.0],
        };
        out.push((sys.embed(&x), x, x0));
    }
    Ok(out)
}

/// Semi-analytic ratio `μ(B_{br})/μ(B_r)` at the reference state, with the
/// centre branch closest to it.
fn analytic_curve(
    cfg: &ExperimentConfig,
    a: f64,
    at: &SolenoidState,
    log10_r: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let k = cfg.branch_depth;
    let gamma = closest_branch(k, a, at.phi, at.v);
    let mut q = SolenoidQuery::new(k, a, at.phi, gamma, 1.0)?;
    if cfg.printed_form {
        q.form = MeasureForm::Printed;
    }
    log10_r
        .iter()
        .map(|&l| {
            let r = 10f64.powf(l);
            let mu = solenoid_ball_measure(&q.with_radius(r))?.mu;
            let inner = solenoid_ball_measure(&q.with_radius(cfg.b * r))?.mu;
            Ok((mu, inner / mu))
        })
        .collect()
}

/// Ensemble of independent references on the solenoid, overlaid with the
/// semi-analytic ratio at the same references.
pub fn run_solenoid(cfg: &ExperimentConfig) -> Result<SolenoidRun> {
    cfg.validate()?;
    let sys = solenoid(cfg)?;
    let zc = zoom_config(cfg);
    let pairs = solenoid_pairs(cfg, &sys, cfg.n_refs)?;
    let ensemble = ensemble_zoom(cfg.n_refs, cfg.grid_step, 0.0, |i| {
        zoom_trace(&sys, &pairs[i].0, pairs[i].2, &zc)
    })?;
    let grid: Vec<f64> = ensemble.aggregate.iter().map(|r| r.log10_r).collect();
    let members: Vec<usize> = ensemble
        .traces
        .iter()
        .map(|(i, _)| *i)
        .filter(|i| !ensemble.excluded.contains(i))
        .collect();
    let curves = {
        use rayon::prelude::*;
        members
            .par_iter()
            .map(|&i| analytic_curve(cfg, sys.a(), &pairs[i].1, &grid))
            .collect::<Result<Vec<_>>>()?
    };
    let analytic: Vec<AnalyticRow> = grid
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let mu: Vec<f64> = curves.iter().map(|c| c[j].0).collect();
            let ratio: Vec<f64> = curves
                .iter()
                .map(|c| c[j].1)
                .filter(|v| v.is_finite())
                .collect();
            AnalyticRow {
                log10_r: l,
                mu: mean_std(&mu).0,
                r_half: mean_std(&ratio).0,
            }
        })
        .collect();
    let full = ensemble
        .aggregate
        .iter()
        .map(|r| r.n_points)
        .max()
        .unwrap_or(0);
    let rows: Vec<usize> = (0..grid.len())
        .filter(|&j| ensemble.aggregate[j].n_points == full && analytic[j].r_half.is_finite())
        .collect();
    let num: Vec<f64> = rows
        .iter()
        .map(|&j| ensemble.aggregate[j].mean_r_half)
        .collect();
    let ana: Vec<f64> = rows.iter().map(|&j| analytic[j].r_half).collect();
    let std: Vec<f64> = rows
        .iter()
        .map(|&j| ensemble.aggregate[j].std_r_half)
        .collect();
    let amp = num.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - num.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SolenoidRun {
        correlation: pearson(&num, &ana),
        synchrony: mean_std(&std).0 / amp,
        ensemble,
        analytic,
    })
}

impl SolenoidRun {
    pub fn output(&self, _cfg: &ExperimentConfig) -> RunOutput {
        let mut out = RunOutput::default();
        out.push("zoom", &ensemble_rows(&self.ensemble, 0.0));
        out.push("agg", &self.ensemble.aggregate);
        out.push("analytic", &self.analytic);
        summarize_ensemble(&mut out, "ensemble", &self.ensemble, 0.0);
        out.set("analytic_correlation", self.correlation);
        out.set("synchrony", self.synchrony);
        out
    }
}

/// Single solenoid reference with the semi-analytic ratio at its radii.
pub(crate) fn run_solenoid_zoom(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let sys = solenoid(cfg)?;
    let pairs = solenoid_pairs(cfg, &sys, 1)?;
    let (zeta, at, x0) = pairs[0];
    let trace = zoom_trace(&sys, &zeta, x0, &zoom_config(cfg))?;
    let lr: Vec<f64> = trace.checkpoints.iter().map(|c| c.r.log10()).collect();
    let curve = analytic_curve(cfg, sys.a(), &at, &lr)?;
    let analytic: Vec<AnalyticRow> = lr
        .iter()
        .zip(&curve)
        .map(|(&l, &(mu, r_half))| AnalyticRow {
            log10_r: l,
            mu,
            r_half,
        })
        .collect();
    let mut out = RunOutput::default();
    out.push("zoom", &ZoomRow::from_trace(0, &trace, 0.0));
    out.push("analytic", &analytic);
    trace_summary(&mut out, &trace, 0.0);
    let num: Vec<f64> = trace.checkpoints.iter().map(|c| c.r_half).collect();
    let ana: Vec<f64> = analytic.iter().map(|a| a.r_half).collect();
    out.set("analytic_correlation", pearson(&num, &ana));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteEnsemble {
    pub ensemble: Ensemble,
}

/// Independent-reference ensembles for the Cantor shift (fresh Bernoulli
/// digits per member) and the fat Cantor set (one point set, references
/// drawn from the set's construction).
pub fn run_discrete_ensemble(cfg: &ExperimentConfig) -> Result<DiscreteEnsemble> {
    cfg.validate()?;
    let zc = zoom_config(cfg);
    let ensemble = match cfg.system.as_str() {
        "cantor-shift" => {
            let depth = cfg.spec()?.param("depth")? as usize;
            let shifts = (cfg.burn_in + cfg.iters) as usize;
            ensemble_zoom(cfg.n_refs, cfg.grid_step, 0.0, |i| {
                let mut r = member_rng(cfg, i);
                let zeta = CantorPoint::random(&mut r, depth);
                let x0 = SymbolicState::bernoulli(&mut r, depth, shifts)?;
                zoom_trace(&CantorShift, &[zeta.value()], x0, &zc)
            })?
        }
        "fat-cantor" => {
            let (points, depth, _) = fat_cantor_points(cfg)?;
            ensemble_zoom(cfg.n_refs, cfg.grid_step, 0.0, |i| {
                let zeta = fat_cantor_reference(&mut member_rng(cfg, i), depth)?;
                point_set_zoom(&points, &zeta, &zc)
            })?
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "no point-set ensemble for `{other}`"
            )))
        }
    };
    Ok(DiscreteEnsemble { ensemble })
}

impl DiscreteEnsemble {
    pub fn output(&self, _cfg: &ExperimentConfig) -> RunOutput {
        let mut out = RunOutput::default();
        out.push("zoom", &ensemble_rows(&self.ensemble, 0.0));
        out.push("agg", &self.ensemble.aggregate);
        summarize_ensemble(&mut out, "ensemble", &self.ensemble, 0.0);
        out
    }
}
