//! One minimising point per passage of a flow through the ball.
//!
//! Every local minimum of `d(t) = |y(t) − ζ|` below the current radius is
//! stored in time order together with the largest distance reached since the
//! previous stored minimum. At radius `r`, consecutive minima whose
//! separating maximum stays within `r` belong to the same passage, and only
//! the smallest minimum of each passage counts. The radius is the fixed
//! point `r = k-th smallest passage minimum at radius r`.

use serde::{Deserialize, Serialize};

use super::{checkpoint_schedule, snapshot_from_distances, Checkpoint, ReferenceMode, ZoomTrace};
use crate::error::{Error, Result};
use crate::systems::{FlowSegment, SegmentStream, VectorField};

/// Interior samples per segment when looking for distance extrema.
const LEDGER_SAMPLES: usize = 8;
/// Interior samples per segment when locating ball crossings.
const TRANSIT_SAMPLES: usize = 16;
const BISECTION_STEPS: usize = 60;
const GOLDEN_TOLERANCE: f64 = 1e-3;
const GRAZE_TOLERANCE: f64 = 1e-12;
/// Raw minima collected, in multiples of `k`, before the first radius is set.
const FILL_FACTOR: usize = 4;
/// Checkpoints span this many doublings before the end of the run.
const SCHEDULE_DOUBLINGS: u32 = 12;

#[inline]
fn dist<const D: usize>(y: &[f64; D], z: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += (y[i] - z[i]) * (y[i] - z[i]);
    }
    s.sqrt()
}

/// `(y − ζ)·ẏ`, half the derivative of `d²`.
#[inline]
fn radial_rate<const D: usize>(seg: &FlowSegment<D>, z: &[f64; D], s: f64) -> (f64, f64) {
    let y = seg.eval_frac(s);
    let f = seg.deriv_frac(s);
    let mut h = 0.0;
    for i in 0..D {
        h += (y[i] - z[i]) * f[i];
    }
    (h, dist(&y, z))
}

/// Root of `g` on `[a, b]` given `g(a)` and `g(b)` of opposite sign.
fn bisect(mut a: f64, mut b: f64, mut ga: f64, g: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..BISECTION_STEPS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct LedgerEntry<const D: usize> {
    d: f64,
    t: f64,
    point: [f64; D],
    /// Largest distance between the previous entry and this one.
    sep: f64,
}

/// Time-ordered record of distance minima with their separating maxima.
#[derive(Clone, Debug)]
pub struct TransitLedger<const D: usize> {
    k: usize,
    entries: Vec<LedgerEntry<D>>,
    r: f64,
    running_max: f64,
    since_update: usize,
    raw_minima: u64,
}

/// Closest point of one passage, as reported by the ledger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitPoint<const D: usize> {
    pub d: f64,
    pub t: f64,
    pub point: [f64; D],
}

impl<const D: usize> TransitLedger<D> {
    pub fn new(k: usize) -> Self {
        TransitLedger {
            k,
            entries: Vec::new(),
            r: f64::INFINITY,
            running_max: 0.0,
            since_update: 0,
            raw_minima: 0,
        }
    }

    /// Current radius; infinite until the first `FILL_FACTOR · k` minima.
    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn raw_minima(&self) -> u64 {
        self.raw_minima
    }

    pub fn is_full(&self) -> bool {
        self.r.is_finite()
    }

    #[inline]
    fn observe(&mut self, d: f64) {
        if d > self.running_max {
            self.running_max = d;
        }
    }

    /// The trajectory stayed beyond the current radius for a stretch.
    #[inline]
    fn leave(&mut self) {
        self.running_max = f64::INFINITY;
    }

    fn add_min(&mut self, d: f64, t: f64, point: [f64; D]) {
        self.raw_minima += 1;
        if d > self.r {
            self.observe(d);
            return;
        }
        self.entries.push(LedgerEntry {
            d,
            t,
            point,
            sep: self.running_max,
        });
        self.running_max = d;
        self.since_update += 1;
        let batch = if self.r.is_finite() {
            (self.entries.len() / 16).max(1)
        } else {
            FILL_FACTOR * self.k
        };
        if self.since_update >= batch {
            self.update();
        }
    }

    /// Smallest entry of each passage at radius `r`, as entry indices.
    fn passages(&self, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let mut open = false;
        for (i, e) in self.entries.iter().enumerate() {
            if e.d > r {
                open = false;
                continue;
            }
            if open && e.sep <= r {
                let last: &mut usize = out.last_mut().expect("open passage");
                if e.d < self.entries[*last].d {
                    *last = i;
                }
            } else {
                out.push(i);
            }
            open = true;
        }
        out
    }

    fn kth_smallest(&self, idx: &[usize]) -> f64 {
        let mut d: Vec<f64> = idx.iter().map(|&i| self.entries[i].d).collect();
        let (_, kth, _) = d.select_nth_unstable_by(self.k - 1, f64::total_cmp);
        *kth
    }

    /// Settle the radius at its fixed point and drop entries beyond it.
    pub fn update(&mut self) {
        self.since_update = 0;
        if self.r.is_infinite() {
            if self.entries.len() < FILL_FACTOR * self.k {
                return;
            }
            let all: Vec<usize> = (0..self.entries.len()).collect();
            self.r = self.kth_smallest(&all);
        }
        loop {
            let groups = self.passages(self.r);
            if groups.len() < self.k {
                break;
            }
            let rk = self.kth_smallest(&groups);
            if rk >= self.r {
                break;
            }
            self.r = rk;
        }
        self.prune();
    }

    fn prune(&mut self) {
        let r = self.r;
        if self.entries.iter().all(|e| e.d <= r) {
            return;
        }
        let mut kept: Vec<LedgerEntry<D>> = Vec::with_capacity(self.entries.len());
        let mut carried = 0.0f64;
        for e in self.entries.drain(..) {
            if e.d > r {
                carried = carried.max(e.sep).max(e.d);
            } else {
                let mut e = e;
                e.sep = e.sep.max(carried);
                carried = 0.0;
                kept.push(e);
            }
        }
        self.running_max = self.running_max.max(carried);
        self.entries = kept;
    }

    /// Closest point of each passage at the current radius, in time order.
    pub fn transit_points(&self) -> Vec<TransitPoint<D>> {
        self.passages(self.r)
            .into_iter()
            .map(|i| {
                let e = &self.entries[i];
                TransitPoint {
                    d: e.d,
                    t: e.t,
                    point: e.point,
                }
            })
            .collect()
    }

    /// Passage minima in ascending order, truncated to `k`.
    fn closest_k(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .passages(self.r)
            .into_iter()
            .map(|i| self.entries[i].d)
            .collect();
        d.sort_by(f64::total_cmp);
        d.truncate(self.k);
        d
    }

    /// Scan one segment for distance extrema.
    pub fn process_segment(&mut self, seg: &FlowSegment<D>, zeta: &[f64; D]) {
        let d0 = dist(&seg.y0, zeta);
        if d0 - seg.excursion_bound() > self.r {
            self.leave();
            return;
        }
        let (mut h_prev, d_prev) = radial_rate(seg, zeta, 0.0);
        self.observe(d_prev);
        let mut s_prev = 0.0;
        for j in 1..=LEDGER_SAMPLES {
            let s = j as f64 / LEDGER_SAMPLES as f64;
            let (h, d) = radial_rate(seg, zeta, s);
            if h_prev < 0.0 && h >= 0.0 {
                let sm = bisect(s_prev, s, h_prev, |x| radial_rate(seg, zeta, x).0);
                let y = seg.eval_frac(sm);
                self.add_min(dist(&y, zeta), seg.t0 + sm * seg.dt(), y);
            } else if h_prev > 0.0 && h <= 0.0 {
                let sm = bisect(s_prev, s, h_prev, |x| radial_rate(seg, zeta, x).0);
                self.observe(radial_rate(seg, zeta, sm).1);
            }
            self.observe(d);
            h_prev = h;
            s_prev = s;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowZoomConfig {
    pub k: usize,
    pub dt: f64,
    pub total_time: f64,
    pub burn_in_time: f64,
    pub checkpoints: Option<usize>,
    pub b: f64,
}

impl Default for FlowZoomConfig {
    fn default() -> Self {
        FlowZoomConfig {
            k: super::DEFAULT_K,
            dt: 0.01,
            total_time: 1.0e5,
            burn_in_time: 100.0,
            checkpoints: None,
            b: 0.5,
        }
    }
}

impl FlowZoomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::param(
                "k",
                self.k as f64,
                "buffer needs at least 2 entries",
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", self.dt, "time step must be positive"));
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(Error::param(
                "time",
                self.total_time,
                "total time must be positive",
            ));
        }
        if !(self.burn_in_time >= 0.0) {
            return Err(Error::param(
                "burn_in_time",
                self.burn_in_time,
                "burn-in must be non-negative",
            ));
        }
        if !(self.b > 0.0 && self.b <= 1.0) {
            return Err(Error::param("b", self.b, "ratio scale must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.total_time / self.dt).round() as u64
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in_time / self.dt).round() as u64
    }
}

/// Zoom trace of `ζ` under the flow started at `y0`, after the burn-in.
///
/// Distances are from the reference point to each passage's closest point;
/// their scaling exponent is that of the transversal section, one less than
/// the attractor dimension. Returns the ledger for inspection.
pub fn continuous_zoom_trace<F: VectorField<D>, const D: usize>(
    field: &F,
    zeta: &[f64; D],
    y0: [f64; D],
    cfg: &FlowZoomConfig,
) -> Result<(ZoomTrace, TransitLedger<D>)> {
    cfg.validate()?;
    let steps = cfg.steps();
    let mut stream = SegmentStream::new(field, y0, 0.0, cfg.dt, None)?;
    stream.skip_steps(cfg.burn_in_steps() as usize)?;
    let schedule =
        checkpoint_schedule((steps >> SCHEDULE_DOUBLINGS).max(1), steps, cfg.checkpoints);
    let mut ledger = TransitLedger::new(cfg.k);
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut next = 0;
    for n in 1..=steps {
        let seg = stream.next().expect("unbounded stream")?;
        ledger.process_segment(&seg, zeta);
        while next < schedule.len() && n >= schedule[next] {
            next += 1;
            ledger.update();
            if !ledger.is_full() {
                continue;
            }
            let d = ledger.closest_k();
            if d.len() < cfg.k {
                continue;
            }
            let r = ledger.radius();
            let cp = snapshot_from_distances(n, &d, cfg.k, r, r, cfg.b);
            if checkpoints.last().is_none_or(|last| cp.r < last.r) {
                checkpoints.push(cp);
            }
        }
    }
    ledger.update();
    let trace = ZoomTrace {
        checkpoints,
        k: cfg.k,
        mode: ReferenceMode::Independent,
        partial: !ledger.is_full() || ledger.closest_k().len() < cfg.k,
        zero_hits: 0,
    };
    Ok((trace, ledger))
}

/// Replay of a [`continuous_zoom_trace`] run through [`ball_transits`] at
/// the run's final radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitCheck {
    pub radius: f64,
    /// Passages strictly inside the ball, found by the replay.
    pub transits: usize,
    /// Points the run kept strictly inside the ball.
    pub ledger_points: usize,
    /// Passages holding exactly one kept point, at the passage minimum.
    pub matched: usize,
    pub grazes: usize,
}

impl TransitCheck {
    pub fn one_point_per_transit(&self) -> bool {
        self.transits == self.ledger_points && self.matched == self.transits
    }
}

/// Re-integrates the run of `continuous_zoom_trace(field, zeta, y0, cfg)`
/// that produced `ledger` and checks that each passage through the final
/// ball contributed exactly one point, no farther out than the replay's
/// passage minimum. Passages touching the boundary within `1e-9 r` are left
/// out on both sides.
pub fn check_transits<F: VectorField<D>, const D: usize>(
    field: &F,
    zeta: &[f64; D],
    y0: [f64; D],
    cfg: &FlowZoomConfig,
    ledger: &TransitLedger<D>,
) -> Result<TransitCheck> {
    let r = ledger.radius();
    if !r.is_finite() {
        return Err(Error::InsufficientData(
            "the run never filled its ledger".into(),
        ));
    }
    let total = (cfg.steps() + cfg.burn_in_steps()) as usize;
    let mut stream = SegmentStream::new(field, y0, 0.0, cfg.dt, Some(total))?;
    stream.skip_steps(cfg.burn_in_steps() as usize)?;
    let (tr, grazes) = ball_transits(stream, zeta, r)?;
    let cut = r * (1.0 - 1e-9);
    let transits: Vec<&BallTransit<D>> = tr.iter().filter(|t| t.d_min < cut).collect();
    let points: Vec<TransitPoint<D>> = ledger
        .transit_points()
        .into_iter()
        .filter(|p| p.d < cut)
        .collect();
    let slack = 1e-9 * cfg.dt;
    let matched = transits
        .iter()
        .filter(|t| {
            let inside: Vec<&TransitPoint<D>> = points
                .iter()
                .filter(|p| p.t >= t.t_entry - slack && p.t <= t.t_exit + slack)
                .collect();
            if inside.len() != 1 {
                return false;
            }
            // the replay locates its minimum to GOLDEN_TOLERANCE dt in time,
            // so its distance may exceed the true minimum by speed times that
            let speed = dist(&field.rhs(t.t_min, &t.closest), &[0.0; D]);
            let excess = t.d_min - inside[0].d;
            excess >= -1e-9 * r && excess <= 2.0 * GOLDEN_TOLERANCE * cfg.dt * speed + 1e-9 * r
        })
        .count();
    Ok(TransitCheck {
        radius: r,
        transits: transits.len(),
        ledger_points: points.len(),
        matched,
        grazes,
    })
}

/// One entry–exit passage through a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallTransit<const D: usize> {
    pub t_entry: f64,
    pub t_exit: f64,
    pub t_min: f64,
    pub closest: [f64; D],
    pub d_min: f64,
}

struct Open<const D: usize> {
    t_entry: f64,
    best: (f64, f64),
    segs: Vec<FlowSegment<D>>,
}

fn eval_at<const D: usize>(segs: &[FlowSegment<D>], t: f64) -> [f64; D] {
    let seg = segs
        .iter()
        .find(|s| t <= s.t1)
        .unwrap_or_else(|| segs.last().expect("non-empty"));
    seg.eval(t.clamp(seg.t0, seg.t1))
}

/// Golden-section minimum of `d` around `t_best` within `[lo, hi]`.
fn golden<const D: usize>(
    segs: &[FlowSegment<D>],
    zeta: &[f64; D],
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |t: f64| dist(&eval_at(segs, t), zeta);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while b - a > tol {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Passages of the trajectory through the closed ball `B_r(ζ)`.
///
/// Crossings are located by bisection of `d(t) − r` on the dense output,
/// passages that dip inside between samples are caught through the sign
/// change of `(y − ζ)·ẏ`, and the closest point of each passage is refined
/// by golden-section search to `1e-3 Δt`. Grazes with `r − d_min` below
/// `1e-12 r` are dropped and counted.
pub fn ball_transits<const D: usize>(
    segments: impl IntoIterator<Item = Result<FlowSegment<D>>>,
    zeta: &[f64; D],
    r: f64,
) -> Result<(Vec<BallTransit<D>>, usize)> {
    if !(r > 0.0) {
        return Err(Error::param("r", r, "radius must be positive"));
    }
    let mut out = Vec::new();
    let mut grazes = 0usize;
    let mut open: Option<Open<D>> = None;
    let mut last_seg: Option<FlowSegment<D>> = None;

    let close = |o: Open<D>, t_exit: f64, out: &mut Vec<BallTransit<D>>, grazes: &mut usize| {
        let dt = o.segs[0].dt();
        let delta = dt / TRANSIT_SAMPLES as f64;
        let lo = (o.best.0 - delta).max(o.t_entry);
        let hi = (o.best.0 + delta).min(t_exit);
        let (mut t_min, mut d_min) = golden(&o.segs, zeta, lo, hi, GOLDEN_TOLERANCE * dt);
        if o.best.1 < d_min {
            (t_min, d_min) = o.best;
        }
        if r - d_min < GRAZE_TOLERANCE * r {
            *grazes += 1;
            return;
        }
        out.push(BallTransit {
            t_entry: o.t_entry,
            t_exit,
            t_min,
            closest: eval_at(&o.segs, t_min),
            d_min,
        });
    };

    for seg in segments {
        let seg = seg?;
        let d0 = dist(&seg.y0, zeta);
        if open.is_none() && d0 - seg.excursion_bound() > r {
            last_seg = Some(seg);
            continue;
        }
        let g = |s: f64| dist(&seg.eval_frac(s), zeta) - r;
        let h = |s: f64| radial_rate(&seg, zeta, s).0;
        let t_of = |s: f64| seg.t0 + s * seg.dt();
        if let Some(o) = open.as_mut() {
            o.segs.push(seg);
        }
        let mut s_prev = 0.0;
        let mut g_prev = d0 - r;
        let mut h_prev = h(0.0);
        if open.is_none() && g_prev <= 0.0 {
            // trajectory starts inside the ball
            let mut segs: Vec<FlowSegment<D>> = last_seg.into_iter().collect();
            segs.push(seg);
            open = Some(Open {
                t_entry: seg.t0,
                best: (seg.t0, d0),
                segs,
            });
        }
        for j in 1..=TRANSIT_SAMPLES {
            let s = j as f64 / TRANSIT_SAMPLES as f64;
            let gs = g(s);
            let hs = h(s);
            if g_prev > 0.0 && gs <= 0.0 {
                let se = bisect(s_prev, s, g_prev, g);
                let mut segs: Vec<FlowSegment<D>> = last_seg.into_iter().collect();
                segs.push(seg);
                open = Some(Open {
                    t_entry: t_of(se),
                    best: (t_of(s), gs + r),
                    segs,
                });
            } else if g_prev <= 0.0 && gs > 0.0 {
                let sx = bisect(s_prev, s, g_prev, g);
                if let Some(o) = open.take() {
                    close(o, t_of(sx), &mut out, &mut grazes);
                }
            } else if g_prev > 0.0 && gs > 0.0 && h_prev < 0.0 && hs >= 0.0 {
                // a dip between samples
                let sm = bisect(s_prev, s, h_prev, h);
                if g(sm) < 0.0 {
                    let se = bisect(s_prev, sm, g_prev, g);
                    let sx = bisect(sm, s, g(sm), g);
                    let o = Open {
                        t_entry: t_of(se),
                        best: (t_of(sm), g(sm) + r),
                        segs: vec![seg],
                    };
                    close(o, t_of(sx), &mut out, &mut grazes);
                }
            }
            if let Some(o) = open.as_mut() {
                if gs + r < o.best.1 {
                    o.best = (t_of(s), gs + r);
                }
            }
            s_prev = s;
            g_prev = gs;
            h_prev = hs;
        }
        last_seg = Some(seg);
    }
    if let Some(o) = open.take() {
        let t_end = o.segs.last().expect("non-empty").t1;
        close(o, t_end, &mut out, &mut grazes);
    }
    Ok((out, grazes))
}
