//! The shrinking-ball engine.
//!
//! A [`RecurrenceBuffer`] keeps the `k` closest visits of an orbit to a
//! reference point; as the orbit lengthens its radius shrinks and the
//! snapshots taken along the way form a [`ZoomTrace`]. Flows go through
//! [`continuous_zoom_trace`], which keeps one minimising point per passage
//! through the ball.

mod buffer;
mod ensemble;
mod flow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    correlation::correlation_dimension_from_distances, default_eps_grid, ebd_fit,
    excesses_at_radius,
};
use crate::systems::{DiscreteSystem, Metric};

pub use buffer::{Recurrence, RecurrenceBuffer};
pub use ensemble::{aggregate_traces, ensemble_zoom, AggregateRow, Ensemble, DEFAULT_GRID_STEP};
pub use flow::{
    ball_transits, check_transits, continuous_zoom_trace, BallTransit, FlowZoomConfig,
    TransitCheck, TransitLedger, TransitPoint,
};

pub const DEFAULT_K: usize = 5000;
pub const DEFAULT_BURN_IN: u64 = 1000;
pub const DEFAULT_WINDOW: u64 = 10;
/// Checkpoints per doubling of the iteration count.
pub const CHECKPOINTS_PER_DOUBLING: f64 = 4.0;
const CORR_GRID_POINTS: usize = 20;

/// Whether the reference point is independent of the orbit or one of its
/// own points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum ReferenceMode {
    Independent,
    /// `ζ = T^index x0`; visits within `window` steps of `index` are skipped.
    OnOrbit {
        index: u64,
        window: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoomConfig {
    pub k: usize,
    pub iters: u64,
    pub burn_in: u64,
    /// Number of geometrically spaced checkpoints between `k` and `iters`;
    /// `None` places four per doubling.
    pub checkpoints: Option<usize>,
    /// Ratio scale `b` of `R(r) = μ(B_{br})/μ(B_r)`.
    pub b: f64,
}

impl Default for ZoomConfig {
    fn default() -> Self {
        ZoomConfig {
            k: DEFAULT_K,
            iters: 1_000_000,
            burn_in: DEFAULT_BURN_IN,
            checkpoints: None,
            b: 0.5,
        }
    }
}

impl ZoomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::param(
                "k",
                self.k as f64,
                "buffer needs at least 2 entries",
            ));
        }
        if !(self.b > 0.0 && self.b <= 1.0) {
            return Err(Error::param("b", self.b, "ratio scale must lie in (0, 1]"));
        }
        if self.checkpoints == Some(0) {
            return Err(Error::param(
                "checkpoints",
                0.0,
                "need at least one checkpoint",
            ));
        }
        Ok(())
    }

    pub(crate) fn schedule(&self) -> Vec<u64> {
        checkpoint_schedule(self.k as u64, self.iters, self.checkpoints)
    }
}

/// Iteration counts at which snapshots are taken.
pub fn checkpoint_schedule(start: u64, end: u64, count: Option<usize>) -> Vec<u64> {
    let start = start.max(1);
    if end <= start {
        return vec![end.max(1)];
    }
    let ratio = end as f64 / start as f64;
    let count = count
        .unwrap_or_else(|| (CHECKPOINTS_PER_DOUBLING * ratio.log2()).floor() as usize + 1)
        .max(1);
    if count == 1 {
        return vec![end];
    }
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let f = i as f64 / (count - 1) as f64;
            (start as f64 * ratio.powf(f)).round() as u64
        })
        .collect();
    *out.last_mut().expect("non-empty") = end;
    out.dedup();
    out
}

/// Snapshot of the shrinking ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Orbit points (maps) or integration steps (flows) processed.
    pub iters: u64,
    pub r: f64,
    pub r_half: f64,
    pub ebd_dim: f64,
    pub corr_dim: f64,
    pub n_inside_half: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoomTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub k: usize,
    pub mode: ReferenceMode,
    /// The buffer never filled: fewer than `k` recurrences were seen.
    pub partial: bool,
    pub zero_hits: u64,
}

impl ZoomTrace {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

/// Checkpoint from `k` stored distances (ascending), the current radius and
/// the threshold radius of the excess sample.
pub(crate) fn snapshot_from_distances(
    iters: u64,
    distances: &[f64],
    k: usize,
    r: f64,
    threshold: f64,
    b: f64,
) -> Checkpoint {
    let n_inside = distances.partition_point(|&d| d <= b * r);
    let ebd = excesses_at_radius(distances, threshold)
        .and_then(|s| ebd_fit(&s))
        .map_or(f64::NAN, |e| e.value);
    let corr = correlation_dimension_from_distances(
        distances,
        &default_eps_grid(distances, CORR_GRID_POINTS),
    )
    .map_or(f64::NAN, |e| e.value);
    Checkpoint {
        iters,
        r,
        r_half: n_inside as f64 / k as f64,
        ebd_dim: ebd,
        corr_dim: corr,
        n_inside_half: n_inside,
    }
}

pub(crate) fn snapshot<S>(buf: &RecurrenceBuffer<S>, iters: u64, b: f64) -> Checkpoint {
    let d = buf.distances();
    let r = buf.radius();
    let outer = buf.outer_radius();
    let threshold = if outer.is_finite() { outer } else { r };
    snapshot_from_distances(iters, &d, buf.capacity(), r, threshold, b)
}

/// Feeds distances into a buffer and records checkpoints on schedule.
pub(crate) struct ZoomRecorder<P> {
    pub(crate) buf: RecurrenceBuffer<P>,
    schedule: Vec<u64>,
    next: usize,
    seen: u64,
    b: f64,
    checkpoints: Vec<Checkpoint>,
    /// Ball contents at each recorded checkpoint, when requested.
    balls: Option<Vec<Vec<P>>>,
}

impl<P: Clone> ZoomRecorder<P> {
    pub(crate) fn new(cfg: &ZoomConfig) -> Self {
        ZoomRecorder {
            buf: RecurrenceBuffer::new(cfg.k),
            schedule: cfg.schedule(),
            next: 0,
            seen: 0,
            b: cfg.b,
            checkpoints: Vec::new(),
            balls: None,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, distance: f64, point: impl FnOnce() -> P, index: u64) {
        if self.buf.would_accept(distance) {
            self.buf.offer(distance, point(), index);
        } else if distance > 0.0 {
            self.buf.offer_rejected(distance);
        } else {
            self.buf.offer_zero();
        }
        self.seen += 1;
        while self.next < self.schedule.len() && self.seen >= self.schedule[self.next] {
            self.next += 1;
            if self.buf.is_full() {
                let cp = snapshot(&self.buf, self.seen, self.b);
                if self.checkpoints.last().is_none_or(|last| cp.r < last.r) {
                    self.checkpoints.push(cp);
                    if let Some(balls) = self.balls.as_mut() {
                        balls.push(
                            self.buf
                                .sorted()
                                .into_iter()
                                .map(|e| e.state.clone())
                                .collect(),
                        );
                    }
                }
            }
        }
    }

    pub(crate) fn finish(self, mode: ReferenceMode) -> (ZoomTrace, RecurrenceBuffer<P>) {
        let trace = ZoomTrace {
            checkpoints: self.checkpoints,
            k: self.buf.capacity(),
            mode,
            partial: !self.buf.is_full(),
            zero_hits: self.buf.zero_hits(),
        };
        (trace, self.buf)
    }
}

fn burn<S: DiscreteSystem>(sys: &S, mut x: S::State, steps: u64) -> Result<S::State> {
    for i in 0..steps {
        x = sys.step(&x).map_err(|e| reindex(e, i))?;
    }
    Ok(x)
}

fn reindex(e: Error, step: u64) -> Error {
    match e {
        Error::Escaped { .. } => Error::Escaped {
            step: step as usize,
        },
        other => other,
    }
}

/// The `k` closest visits of the orbit of `x0` to an independent `ζ`,
/// after discarding `burn_in` iterations.
pub fn track_recurrences<S: DiscreteSystem>(
    sys: &S,
    zeta: &S::Point,
    x0: S::State,
    iters: u64,
    k: usize,
    burn_in: u64,
) -> Result<RecurrenceBuffer<S::Point>> {
    let cfg = ZoomConfig {
        k,
        iters,
        burn_in,
        checkpoints: Some(1),
        ..ZoomConfig::default()
    };
    let (_, buf) = run_zoom(sys, zeta, x0, &cfg, None)?;
    Ok(buf)
}

/// Zoom trace of an independent reference point `ζ`.
pub fn zoom_trace<S: DiscreteSystem>(
    sys: &S,
    zeta: &S::Point,
    x0: S::State,
    cfg: &ZoomConfig,
) -> Result<ZoomTrace> {
    cfg.validate()?;
    Ok(run_zoom(sys, zeta, x0, cfg, None)?.0)
}

/// Zoom trace of an independent `ζ` and the final buffer.
pub fn zoom_trace_and_buffer<S: DiscreteSystem>(
    sys: &S,
    zeta: &S::Point,
    x0: S::State,
    cfg: &ZoomConfig,
) -> Result<(ZoomTrace, RecurrenceBuffer<S::Point>)> {
    cfg.validate()?;
    run_zoom(sys, zeta, x0, cfg, None)
}

/// Zoom trace of `ζ = T^index x0` (counted after burn-in) against the same
/// orbit, skipping visits within `window` steps of `index`. The reference
/// may lie anywhere in the orbit, including beyond its end.
pub fn zoom_trace_on_orbit<S: DiscreteSystem>(
    sys: &S,
    x0: S::State,
    index: u64,
    window: u64,
    cfg: &ZoomConfig,
) -> Result<ZoomTrace> {
    cfg.validate()?;
    let start = burn(sys, x0, cfg.burn_in)?;
    let zeta = sys.embed(&burn(sys, start.clone(), index)?);
    let excl = (index.saturating_sub(window), index.saturating_add(window));
    let (mut trace, _) = run_zoom(
        sys,
        &zeta,
        start,
        &ZoomConfig {
            burn_in: 0,
            ..cfg.clone()
        },
        Some(excl),
    )?;
    trace.mode = ReferenceMode::OnOrbit { index, window };
    Ok(trace)
}

/// Zoom trace of an independent `ζ` together with the ball contents, sorted
/// by distance, at every checkpoint.
pub fn zoom_trace_with_balls<S: DiscreteSystem>(
    sys: &S,
    zeta: &S::Point,
    x0: S::State,
    cfg: &ZoomConfig,
) -> Result<(ZoomTrace, Vec<Vec<S::Point>>)> {
    cfg.validate()?;
    let mut rec = ZoomRecorder::new(cfg);
    rec.balls = Some(Vec::new());
    let mut rec = feed_orbit(sys, zeta, x0, cfg, None, rec)?;
    let balls = rec.balls.take().unwrap_or_default();
    Ok((rec.finish(ReferenceMode::Independent).0, balls))
}

fn run_zoom<S: DiscreteSystem>(
    sys: &S,
    zeta: &S::Point,
    x0: S::State,
    cfg: &ZoomConfig,
    exclude: Option<(u64, u64)>,
) -> Result<(ZoomTrace, RecurrenceBuffer<S::Point>)> {
    let rec = feed_orbit(sys, zeta, x0, cfg, exclude, ZoomRecorder::new(cfg))?;
    Ok(rec.finish(ReferenceMode::Independent))
}

fn feed_orbit<S: DiscreteSystem>(
    sys: &S,
    zeta: &S::Point,
    x0: S::State,
    cfg: &ZoomConfig,
    exclude: Option<(u64, u64)>,
    mut rec: ZoomRecorder<S::Point>,
) -> Result<ZoomRecorder<S::Point>> {
    let mut x = burn(sys, x0, cfg.burn_in)?;
    for n in 0..cfg.iters {
        if exclude.is_none_or(|(lo, hi)| n < lo || n > hi) {
            let p = sys.embed(&x);
            rec.push(p.distance(zeta), || p, n);
        }
        if n + 1 < cfg.iters {
            x = sys.step(&x).map_err(|e| reindex(e, n + cfg.burn_in))?;
        }
    }
    Ok(rec)
}

/// Zoom trace over a fixed point set, visited in slice order.
pub fn point_set_zoom<P: Metric + Clone>(
    points: &[P],
    zeta: &P,
    cfg: &ZoomConfig,
) -> Result<ZoomTrace> {
    cfg.validate()?;
    let cfg = ZoomConfig {
        iters: points.len() as u64,
        ..cfg.clone()
    };
    let mut rec = ZoomRecorder::new(&cfg);
    for (i, p) in points.iter().enumerate() {
        rec.push(p.distance(zeta), || p.clone(), i as u64);
    }
    Ok(rec.finish(ReferenceMode::Independent).0)
}

/// Zoom trace of each reference in `refs` against one stored orbit.
///
/// Reference `j` is `orbit[j]`; orbit points within `window` of `j` are
/// skipped. Returns one trace per reference, in input order.
pub fn orbit_zoom_traces<P: Metric + Copy + Sync>(
    orbit: &[P],
    refs: &[usize],
    window: u64,
    cfg: &ZoomConfig,
) -> Result<Vec<ZoomTrace>> {
    use rayon::prelude::*;
    cfg.validate()?;
    if let Some(&bad) = refs.iter().find(|&&j| j >= orbit.len()) {
        return Err(Error::InvalidInput(format!(
            "reference index {bad} beyond orbit length {}",
            orbit.len()
        )));
    }
    let cfg = ZoomConfig {
        iters: orbit.len() as u64,
        ..cfg.clone()
    };
    refs.par_iter()
        .map(|&j| {
            let zeta = orbit[j];
            let mut rec = ZoomRecorder::new(&cfg);
            let (lo, hi) = ((j as u64).saturating_sub(window), j as u64 + window);
            for (n, p) in orbit.iter().enumerate() {
                let n = n as u64;
                if n < lo || n > hi {
                    rec.push(p.distance(&zeta), || *p, n);
                }
            }
            let (mut t, _) = rec.finish(ReferenceMode::Independent);
            t.mode = ReferenceMode::OnOrbit {
                index: j as u64,
                window,
            };
            Ok(t)
        })
        .collect()
}
