//! Independent reference points, one orbit each, and their aggregate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ZoomTrace;
use crate::error::{Error, Result};
use crate::estimators::stats::mean_std;

/// Spacing of the aggregate grid, in decades of `r`.
pub const DEFAULT_GRID_STEP: f64 = 0.05;

/// Ensemble statistics at one grid radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub checkpoint: usize,
    pub log10_r: f64,
    #[serde(rename = "mean_R_half")]
    pub mean_r_half: f64,
    #[serde(rename = "std_R_half")]
    pub std_r_half: f64,
    pub mean_ebd: f64,
    pub std_ebd: f64,
    pub mean_corr: f64,
    pub std_corr: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    /// `(member id, trace)` in ascending id order, partial traces included.
    pub traces: Vec<(usize, ZoomTrace)>,
    /// Members whose run failed, with the reason.
    pub failed: Vec<(usize, String)>,
    /// Members left out of the aggregate: failed or partial.
    pub excluded: Vec<usize>,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs `member(i)` for `i in 0..n_refs` on the rayon pool and aggregates
/// the complete traces. `dim_offset` is added to both dimension estimates
/// in the aggregate.
pub fn ensemble_zoom<F>(
    n_refs: usize,
    grid_step: f64,
    dim_offset: f64,
    member: F,
) -> Result<Ensemble>
where
    F: Fn(usize) -> Result<ZoomTrace> + Sync,
{
    if n_refs == 0 {
        return Err(Error::param(
            "refs",
            0.0,
            "need at least one reference point",
        ));
    }
    let results: Vec<Result<ZoomTrace>> = (0..n_refs).into_par_iter().map(&member).collect();
    let mut traces = Vec::new();
    let mut failed = Vec::new();
    let mut excluded = Vec::new();
    let mut first_err = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => {
                if t.partial || t.checkpoints.is_empty() {
                    excluded.push(i);
                }
                traces.push((i, t));
            }
            Err(e) => {
                failed.push((i, e.to_string()));
                excluded.push(i);
                first_err.get_or_insert(e);
            }
        }
    }
    if traces.is_empty() {
        return Err(first_err.expect("every member failed"));
    }
    let complete: Vec<&ZoomTrace> = traces
        .iter()
        .filter(|(i, _)| !excluded.contains(i))
        .map(|(_, t)| t)
        .collect();
    let aggregate = aggregate_traces(&complete, grid_step, dim_offset);
    Ok(Ensemble {
        traces,
        failed,
        excluded,
        aggregate,
    })
}

/// Linear interpolation of `(log10 r, value)` pairs at `x`; `None` outside
/// the trace's span.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let (lo, hi) = (xs[xs.len() - 1], xs[0]);
    if x < lo || x > hi {
        return None;
    }
    // xs descending
    let j = xs.partition_point(|&v| v > x);
    if j == 0 {
        return Some(ys[0]);
    }
    if j >= xs.len() {
        return Some(ys[xs.len() - 1]);
    }
    let (x0, x1) = (xs[j - 1], xs[j]);
    if x1 == x {
        return Some(ys[j]);
    }
    let f = (x0 - x) / (x0 - x1);
    Some(ys[j - 1] + f * (ys[j] - ys[j - 1]))
}

/// Mean and standard deviation of traces interpolated onto a grid of
/// multiples of `step` in `log10 r`, from the largest radius down. Grid
/// points outside every trace's span are omitted; non-finite dimension
/// estimates are skipped.
pub fn aggregate_traces(traces: &[&ZoomTrace], step: f64, dim_offset: f64) -> Vec<AggregateRow> {
    struct Series {
        x: Vec<f64>,
        rh: Vec<f64>,
        ebd: Vec<f64>,
        corr: Vec<f64>,
    }
    let series: Vec<Series> = traces
        .iter()
        .filter(|t| !t.checkpoints.is_empty())
        .map(|t| Series {
            x: t.checkpoints.iter().map(|c| c.r.log10()).collect(),
            rh: t.checkpoints.iter().map(|c| c.r_half).collect(),
            ebd: t
                .checkpoints
                .iter()
                .map(|c| c.ebd_dim + dim_offset)
                .collect(),
            corr: t
                .checkpoints
                .iter()
                .map(|c| c.corr_dim + dim_offset)
                .collect(),
        })
        .collect();
    if series.is_empty() || !(step > 0.0) {
        return Vec::new();
    }
    let top = series
        .iter()
        .map(|s| s.x[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let bottom = series
        .iter()
        .map(|s| s.x[s.x.len() - 1])
        .fold(f64::INFINITY, f64::min);
    let (i_top, i_bottom) = ((top / step).floor() as i64, (bottom / step).ceil() as i64);
    let mut rows = Vec::new();
    // a single-checkpoint trace contributes at its own radius
    let mut grid: Vec<f64> = (i_bottom..=i_top).rev().map(|i| i as f64 * step).collect();
    if grid.is_empty() {
        grid.push(top);
    }
    for x in grid {
        let (mut rh, mut ebd, mut corr) = (Vec::new(), Vec::new(), Vec::new());
        for s in &series {
            let Some(v) = interpolate(&s.x, &s.rh, x) else {
                continue;
            };
            rh.push(v);
            if let Some(e) = interpolate(&s.x, &s.ebd, x).filter(|e| e.is_finite()) {
                ebd.push(e);
            }
            if let Some(c) = interpolate(&s.x, &s.corr, x).filter(|c| c.is_finite()) {
                corr.push(c);
            }
        }
        if rh.is_empty() {
            continue;
        }
        let (mr, sr) = mean_std(&rh);
        let (me, se) = mean_std(&ebd);
        let (mc, sc) = mean_std(&corr);
        rows.push(AggregateRow {
            checkpoint: rows.len(),
            log10_r: x,
            mean_r_half: mr,
            std_r_half: sr,
            mean_ebd: me,
            std_ebd: se,
            mean_corr: mc,
            std_corr: sc,
            n_points: rh.len(),
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::super::{Checkpoint, ReferenceMode};
    use super::*;

    fn trace(points: &[(f64, f64, f64)]) -> ZoomTrace {
        ZoomTrace {
            checkpoints: points
                .iter()
                .enumerate()
                .map(|(i, &(r, rh, e))| Checkpoint {
                    iters: i as u64,
                    r,
                    r_half: rh,
                    ebd_dim: e,
                    corr_dim: e,
                    n_inside_half: 0,
                })
                .collect(),
            k: 10,
            mode: ReferenceMode::Independent,
            partial: false,
            zero_hits: 0,
        }
    }

    #[test]
    fn single_trace_is_reproduced() {
        let t = trace(&[(1.0, 0.5, 1.0), (0.1, 0.3, 2.0), (0.01, 0.7, 1.5)]);
        let rows = aggregate_traces(&[&t], 0.5, 0.0);
        let x: Vec<f64> = rows.iter().map(|r| r.log10_r).collect();
        assert_eq!(x, vec![0.0, -0.5, -1.0, -1.5, -2.0]);
        assert!((rows[1].mean_r_half - 0.4).abs() < 1e-12);
        assert!((rows[4].mean_ebd - 1.5).abs() < 1e-12);
        assert!(rows.iter().all(|r| r.std_r_half == 0.0 && r.n_points == 1));
    }

    #[test]
    fn order_of_members_does_not_matter() {
        let a = trace(&[(1.0, 0.5, 1.0), (0.01, 0.3, 2.0)]);
        let b = trace(&[(0.5, 0.2, 1.2), (0.001, 0.6, 1.1)]);
        let c = trace(&[(0.2, 0.4, 1.3), (0.05, 0.45, 1.4)]);
        let x = aggregate_traces(&[&a, &b, &c], DEFAULT_GRID_STEP, 1.0);
        let y = aggregate_traces(&[&c, &a, &b], DEFAULT_GRID_STEP, 1.0);
        assert_eq!(x.len(), y.len());
        for (p, q) in x.iter().zip(&y) {
            assert_eq!(p.n_points, q.n_points);
            assert!((p.mean_r_half - q.mean_r_half).abs() < 1e-12);
            assert!((p.std_ebd - q.std_ebd).abs() < 1e-12);
        }
        assert_eq!(x.iter().map(|r| r.n_points).max(), Some(3));
        assert!(x.iter().all(|r| r.mean_ebd >= 2.0));
    }

    #[test]
    fn failed_and_partial_members_are_excluded() {
        let e = ensemble_zoom(4, 0.5, 0.0, |i| match i {
            0 => Err(Error::Escaped { step: 3 }),
            1 => {
                let mut t = trace(&[(1.0, 0.5, 1.0)]);
                t.partial = true;
                Ok(t)
            }
            _ => Ok(trace(&[(1.0, 0.5, 1.0), (0.1, 0.5, 1.0)])),
        })
        .unwrap();
        assert_eq!(e.excluded, vec![0, 1]);
        assert_eq!(e.failed.len(), 1);
        assert!(e.aggregate.iter().all(|r| r.n_points == 2));
        assert!(ensemble_zoom(2, 0.5, 0.0, |_| Err(Error::Escaped { step: 0 })).is_err());
    }
}
