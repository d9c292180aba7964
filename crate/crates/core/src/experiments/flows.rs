//! Pipelines for the flows: Lorenz 63, Lorenz 96 and Hénon–Heiles.

use rand::Rng;

use super::discrete::{ensemble_rows, summarize_ensemble};
use super::output::{RunOutput, ZoomRow};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::recurrence::{
    check_transits, continuous_zoom_trace, ensemble_zoom, Ensemble, FlowZoomConfig, TransitCheck,
};
use crate::rng::{self, streams};
use crate::systems::{
    henon_heiles_energy, HenonHeiles, Lorenz63, Lorenz96, SegmentStream, VectorField,
};

/// Initial condition `(x, p_x, y, p_y)` of the Hénon–Heiles runs.
pub const HENON_HEILES_INITIAL: [f64; 4] = [0.0, -0.25, 0.42, 0.0];
/// Integration steps between consecutive reference points of the pilot.
const PILOT_STRIDE: usize = 1000;
const PERTURBATION: f64 = 1e-6;
/// Largest Lorenz 96 dimension the runners are instantiated for.
pub(crate) const MAX_LORENZ96_DIM: usize = 10;
/// Distances are measured on passages through the ball: the section has
/// one dimension less than the attractor.
const FLOW_DIM_OFFSET: f64 = 1.0;

fn flow_config(cfg: &ExperimentConfig) -> FlowZoomConfig {
    FlowZoomConfig {
        k: cfg.k,
        dt: cfg.dt,
        total_time: cfg.total_time,
        burn_in_time: cfg.burn_in_time,
        checkpoints: cfg.checkpoints,
        b: cfg.b,
    }
}

/// `(ζ, y0)` per member from a pilot trajectory: `ζ` every
/// `PILOT_STRIDE` steps after the burn-in, `y0` half a stride later,
/// perturbed.
pub(crate) fn flow_pairs<F: VectorField<D>, const D: usize>(
    field: &F,
    start: [f64; D],
    cfg: &ExperimentConfig,
    n: usize,
) -> Result<Vec<([f64; D], [f64; D])>> {
    let mut s = SegmentStream::new(field, start, 0.0, cfg.dt, None)?;
    s.skip_steps((cfg.burn_in_time / cfg.dt).round() as usize)?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        s.skip_steps(PILOT_STRIDE / 2)?;
        let zeta = s.state();
        s.skip_steps(PILOT_STRIDE / 2)?;
        let mut r = rng::stream(cfg.seed, streams::MEMBER_BASE + i as u64);
        let mut y0 = s.state();
        for v in y0.iter_mut() {
            *v += PERTURBATION * r.random_range(-1.0..1.0);
        }
        out.push((zeta, y0));
    }
    Ok(out)
}

fn perturbed_start<const D: usize>(cfg: &ExperimentConfig, base: [f64; D]) -> [f64; D] {
    let mut p = rng::stream(cfg.seed, streams::PILOT);
    let mut y = base;
    for v in y.iter_mut() {
        *v += 1e-3 * p.random_range(-1.0..1.0);
    }
    y
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowEnsemble {
    pub ensemble: Ensemble,
    /// Replay of member 0 through the independent transit detector, when
    /// that member filled its ledger.
    pub transit_check: Option<TransitCheck>,
    /// Largest relative energy change along member 0, Hamiltonian flows.
    pub energy_drift: Option<f64>,
}

fn flow_ensemble<F: VectorField<D>, const D: usize>(
    field: &F,
    start: [f64; D],
    cfg: &ExperimentConfig,
) -> Result<FlowEnsemble> {
    let fc = flow_config(cfg);
    fc.validate()?;
    let pairs = flow_pairs(field, start, cfg, cfg.n_refs)?;
    let ensemble = ensemble_zoom(cfg.n_refs, cfg.grid_step, FLOW_DIM_OFFSET, |i| {
        Ok(continuous_zoom_trace(field, &pairs[i].0, pairs[i].1, &fc)?.0)
    })?;
    let (trace, ledger) = continuous_zoom_trace(field, &pairs[0].0, pairs[0].1, &fc)?;
    let transit_check = if trace.partial {
        None
    } else {
        Some(check_transits(
            field,
            &pairs[0].0,
            pairs[0].1,
            &fc,
            &ledger,
        )?)
    };
    Ok(FlowEnsemble {
        ensemble,
        transit_check,
        energy_drift: None,
    })
}

/// Largest `|H(t) − H(0)| / |H(0)|` over the burn-in and run of `y0`.
fn energy_drift(cfg: &ExperimentConfig, y0: [f64; 4]) -> Result<f64> {
    let steps = ((cfg.burn_in_time + cfg.total_time) / cfg.dt).round() as usize;
    let h0 = henon_heiles_energy(&y0);
    let mut worst: f64 = 0.0;
    for seg in SegmentStream::new(&HenonHeiles, y0, 0.0, cfg.dt, Some(steps))? {
        let seg = seg?;
        worst = worst.max((henon_heiles_energy(&seg.y1) - h0).abs());
    }
    Ok(worst / h0.abs())
}

fn lorenz63(cfg: &ExperimentConfig) -> Result<Lorenz63> {
    let spec = cfg.spec()?;
    Ok(Lorenz63 {
        sigma: spec.param("sigma")?,
        rho: spec.param("rho")?,
        beta: spec.param("beta")?,
    })
}

fn lorenz96_start<const N: usize>(cfg: &ExperimentConfig, forcing: f64) -> [f64; N] {
    let mut y = [forcing; N];
    y[0] += 0.01;
    perturbed_start(cfg, y)
}

/// A computation generic over the flow and its dimension.
pub(crate) trait FlowVisitor {
    type Output;
    fn visit<F: VectorField<D>, const D: usize>(
        self,
        field: &F,
        start: [f64; D],
    ) -> Result<Self::Output>;
}

fn lorenz96_visit<const N: usize, V: FlowVisitor>(
    cfg: &ExperimentConfig,
    forcing: f64,
    v: V,
) -> Result<V::Output> {
    v.visit(&Lorenz96 { forcing }, lorenz96_start::<N>(cfg, forcing))
}

/// Runs `body` on the flow named in `cfg`, from its pilot start.
pub(crate) fn with_flow<V: FlowVisitor>(cfg: &ExperimentConfig, body: V) -> Result<V::Output> {
    match cfg.system.as_str() {
        "lorenz63" => body.visit(&lorenz63(cfg)?, perturbed_start(cfg, [1.0, 1.0, 1.0])),
        "henon-heiles" => body.visit(&HenonHeiles, HENON_HEILES_INITIAL),
        "lorenz96" => {
            let spec = cfg.spec()?;
            let f = spec.param("F")?;
            match spec.param("n")? as usize {
                4 => lorenz96_visit::<4, V>(cfg, f, body),
                5 => lorenz96_visit::<5, V>(cfg, f, body),
                6 => lorenz96_visit::<6, V>(cfg, f, body),
                7 => lorenz96_visit::<7, V>(cfg, f, body),
                8 => lorenz96_visit::<8, V>(cfg, f, body),
                9 => lorenz96_visit::<9, V>(cfg, f, body),
                10 => lorenz96_visit::<10, V>(cfg, f, body),
                n => Err(Error::param(
                    "n",
                    n as f64,
                    format!("Lorenz 96 runs support n in 4..={MAX_LORENZ96_DIM}"),
                )),
            }
        }
        other => Err(Error::InvalidInput(format!("`{other}` is not a flow"))),
    }
}

struct EnsembleVisitor<'a>(&'a ExperimentConfig);

impl FlowVisitor for EnsembleVisitor<'_> {
    type Output = FlowEnsemble;

    fn visit<F: VectorField<D>, const D: usize>(
        self,
        field: &F,
        start: [f64; D],
    ) -> Result<FlowEnsemble> {
        flow_ensemble(field, start, self.0)
    }
}

struct ZoomVisitor<'a>(&'a ExperimentConfig);

impl FlowVisitor for ZoomVisitor<'_> {
    type Output = RunOutput;

    fn visit<F: VectorField<D>, const D: usize>(
        self,
        field: &F,
        start: [f64; D],
    ) -> Result<RunOutput> {
        single_zoom(field, start, self.0)
    }
}

fn require(cfg: &ExperimentConfig, system: &str) -> Result<()> {
    if cfg.system == system {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "expected system `{system}`, got `{}`",
            cfg.system
        )))
    }
}

pub fn run_lorenz63(cfg: &ExperimentConfig) -> Result<FlowEnsemble> {
    require(cfg, "lorenz63")?;
    run_flow_ensemble(cfg)
}

pub fn run_lorenz96(cfg: &ExperimentConfig) -> Result<FlowEnsemble> {
    require(cfg, "lorenz96")?;
    run_flow_ensemble(cfg)
}

pub fn run_henon_heiles(cfg: &ExperimentConfig) -> Result<FlowEnsemble> {
    require(cfg, "henon-heiles")?;
    run_flow_ensemble(cfg)
}

/// Independent-reference ensemble on any registered flow.
pub fn run_flow_ensemble(cfg: &ExperimentConfig) -> Result<FlowEnsemble> {
    cfg.validate()?;
    let mut e = with_flow(cfg, EnsembleVisitor(cfg))?;
    if cfg.system == "henon-heiles" {
        let y0 = flow_pairs(&HenonHeiles, HENON_HEILES_INITIAL, cfg, 1)?[0].1;
        e.energy_drift = Some(energy_drift(cfg, y0)?);
    }
    Ok(e)
}

impl FlowEnsemble {
    pub fn output(&self, _cfg: &ExperimentConfig) -> RunOutput {
        let mut out = RunOutput::default();
        out.push("zoom", &ensemble_rows(&self.ensemble, FLOW_DIM_OFFSET));
        out.push("agg", &self.ensemble.aggregate);
        summarize_ensemble(&mut out, "ensemble", &self.ensemble, FLOW_DIM_OFFSET);
        match &self.transit_check {
            Some(c) => transit_summary(&mut out, c),
            None => out
                .notes
                .push("member 0 never filled its ledger; transit check skipped".into()),
        }
        if let Some(d) = self.energy_drift {
            out.set("energy_drift", d);
        }
        out
    }
}

fn transit_summary(out: &mut RunOutput, c: &TransitCheck) {
    out.set("transit_radius", c.radius);
    out.set("transits", c.transits as f64);
    out.set("transit_points", c.ledger_points as f64);
    out.set("transits_matched", c.matched as f64);
    out.set("transit_grazes", c.grazes as f64);
    out.set(
        "one_point_per_transit",
        if c.one_point_per_transit() { 1.0 } else { 0.0 },
    );
}

fn single_zoom<F: VectorField<D>, const D: usize>(
    field: &F,
    start: [f64; D],
    cfg: &ExperimentConfig,
) -> Result<RunOutput> {
    let fc = flow_config(cfg);
    fc.validate()?;
    let (zeta, y0) = flow_pairs(field, start, cfg, 1)?[0];
    let (trace, ledger) = continuous_zoom_trace(field, &zeta, y0, &fc)?;
    let mut out = RunOutput::default();
    out.push("zoom", &ZoomRow::from_trace(0, &trace, FLOW_DIM_OFFSET));
    if let Some(c) = trace.last() {
        out.set("final_r", c.r);
        out.set("final_r_half", c.r_half);
        out.set("final_ebd", c.ebd_dim + FLOW_DIM_OFFSET);
        out.set("final_corr", c.corr_dim + FLOW_DIM_OFFSET);
    }
    out.set("partial", if trace.partial { 1.0 } else { 0.0 });
    out.set("raw_minima", ledger.raw_minima() as f64);
    if !trace.partial {
        transit_summary(&mut out, &check_transits(field, &zeta, y0, &fc, &ledger)?);
    }
    Ok(out)
}

/// Single-reference zoom trace of a flow.
pub fn run_flow_zoom(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = with_flow(cfg, ZoomVisitor(cfg))?;
    if cfg.system == "henon-heiles" {
        let y0 = flow_pairs(&HenonHeiles, HENON_HEILES_INITIAL, cfg, 1)?[0].1;
        out.set("energy_drift", energy_drift(cfg, y0)?);
    }
    Ok(out)
}
