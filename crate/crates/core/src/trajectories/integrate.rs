use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FrameSeries, Guidance, Interpolation, Point, Trajectory, TrajectoryEnsemble, TrajectoryKind};
use crate::dynamics::EvolutionTrace;
use crate::error::{Error, Result};

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    #[serde(default)]
    pub interpolation: Interpolation,
    /// Keep every `record_stride`-th position (plus the last one).
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { interpolation: Interpolation::Linear, record_stride: 1 }
    }
}

/// Drift used by the stochastic integrator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    /// Forward drift `v + u`.
    #[default]
    Nelson,
    /// `b = 0`: pure Brownian motion.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    /// Number of steps; defaults to the whole trace.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Diffusion constant on every axis; defaults to `hbar / 2m` per axis.
    #[serde(default)]
    pub diffusion: Option<f64>,
    pub rng_seed: u64,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default)]
    pub drift: DriftMode,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

impl SdeConfig {
    pub fn new(dt: f64, rng_seed: u64) -> Self {
        Self {
            dt,
            steps: None,
            diffusion: None,
            rng_seed,
            interpolation: Interpolation::Linear,
            drift: DriftMode::Nelson,
            record_stride: 1,
        }
    }
}

/// Step times covering the trace; `dt` must divide every snapshot interval.
fn schedule(frame_times: &[f64], dt: f64, steps: Option<usize>) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    let mut times = vec![frame_times[0]];
    for w in frame_times.windows(2) {
        let ratio = (w[1] - w[0]) / dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::InvalidParams(format!(
                "dt = {dt} does not divide the snapshot interval {}",
                w[1] - w[0]
            )));
        }
        let n = n as usize;
        for k in 1..n {
            times.push(w[0] + k as f64 * dt);
        }
        times.push(w[1]);
    }
    let available = times.len() - 1;
    match steps {
        Some(s) if s > available => Err(Error::InvalidParams(format!(
            "{s} steps requested but the trace covers only {available}"
        ))),
        Some(0) => Err(Error::InvalidParams("steps must be at least 1".into())),
        Some(s) => {
            times.truncate(s + 1);
            Ok(times)
        }
        None if available == 0 => Err(Error::InvalidParams("trace has a single frame".into())),
        None => Ok(times),
    }
}

fn recorded(times: &[f64], stride: usize) -> Result<(Vec<bool>, Arc<Vec<f64>>)> {
    if stride == 0 {
        return Err(Error::InvalidParams("record_stride must be at least 1".into()));
    }
    let last = times.len() - 1;
    let keep: Vec<bool> = (0..times.len()).map(|i| i % stride == 0 || i == last).collect();
    let kept = times.iter().zip(&keep).filter(|(_, k)| **k).map(|(t, _)| *t).collect();
    Ok((keep, Arc::new(kept)))
}

fn check_inputs(trace: &EvolutionTrace, q0: &[Point], guidance: &Guidance) -> Result<()> {
    guidance.validate()?;
    if q0.is_empty() {
        return Err(Error::InvalidInput("no initial positions".into()));
    }
    if guidance.masses.len() != trace.grid().dim() {
        return Err(Error::InvalidInput("need one mass per axis".into()));
    }
    if q0.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidInput("non-finite initial position".into()));
    }
    Ok(())
}

/// RK4 integration of the guiding equation through the frames of `trace`.
pub fn integrate_bohmian(
    trace: &EvolutionTrace,
    q0: &[Point],
    dt: f64,
    guidance: &Guidance,
    options: &IntegrationOptions,
) -> Result<TrajectoryEnsemble> {
    check_inputs(trace, q0, guidance)?;
    let frames = FrameSeries::from_trace(trace, options.interpolation)?;
    let times = schedule(&frames.times(), dt, None)?;
    let (keep, kept) = recorded(&times, options.record_stride)?;
    let grid = frames.grid();
    let dim = grid.dim();

    let trajectories = q0
        .par_iter()
        .enumerate()
        .map(|(i, &start)| {
            let mut q = grid.wrap_point(start);
            let mut positions = Vec::with_capacity(kept.len());
            positions.push(q);
            let mut node_hits = 0;
            for (k, w) in times.windows(2).enumerate() {
                let (t, h) = (w[0], w[1] - w[0]);
                let mut eval = |ts: f64, p: Point| {
                    let s = frames.velocity_in_step(ts, t, p, guidance);
                    node_hits += s.flagged as usize;
                    s.value
                };
                let shift = |p: Point, d: Point, c: f64| [p[0] + c * d[0], p[1] + c * d[1]];
                let k1 = eval(t, q);
                let k2 = eval(t + 0.5 * h, shift(q, k1, 0.5 * h));
                let k3 = eval(t + 0.5 * h, shift(q, k2, 0.5 * h));
                let k4 = eval(t + h, shift(q, k3, h));
                for a in 0..dim {
                    q[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
                }
                q = grid.wrap_point(q);
                if keep[k + 1] {
                    positions.push(q);
                }
            }
            Trajectory {
                times: kept.clone(),
                positions,
                seed: 0,
                index: i as u64,
                kind: TrajectoryKind::Bohmian,
                node_hits,
            }
        })
        .collect();
    Ok(TrajectoryEnsemble { kind: TrajectoryKind::Bohmian, dim, times: kept, trajectories })
}

/// Euler-Maruyama integration of `dq = b dt + sqrt(2 nu) dW`. Trajectory `i`
/// draws from stream `i` of a ChaCha8 generator seeded with `rng_seed`.
pub fn integrate_nelson(
    trace: &EvolutionTrace,
    q0: &[Point],
    cfg: &SdeConfig,
    guidance: &Guidance,
) -> Result<TrajectoryEnsemble> {
    check_inputs(trace, q0, guidance)?;
    if let Some(nu) = cfg.diffusion {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParams(format!("diffusion must be nonnegative, got {nu}")));
        }
    }
    let frames = FrameSeries::from_trace(trace, cfg.interpolation)?;
    let times = schedule(&frames.times(), cfg.dt, cfg.steps)?;
    let (keep, kept) = recorded(&times, cfg.record_stride)?;
    let grid = frames.grid();
    let dim = grid.dim();
    let nu: Vec<f64> = (0..dim).map(|a| cfg.diffusion.unwrap_or_else(|| guidance.diffusion(a))).collect();

    let trajectories = q0
        .par_iter()
        .enumerate()
        .map(|(i, &start)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(i as u64);
            let mut q = grid.wrap_point(start);
            let mut positions = Vec::with_capacity(kept.len());
            positions.push(q);
            let mut node_hits = 0;
            for (k, w) in times.windows(2).enumerate() {
                let (t, h) = (w[0], w[1] - w[0]);
                let b = match cfg.drift {
                    DriftMode::Nelson => {
                        let s = frames.drift(t, q, guidance);
                        node_hits += s.flagged as usize;
                        s.value
                    }
                    DriftMode::Zero => [0.0; 2],
                };
                for a in 0..dim {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    q[a] += b[a] * h + (2.0 * nu[a] * h).sqrt() * xi;
                }
                q = grid.wrap_point(q);
                if keep[k + 1] {
                    positions.push(q);
                }
            }
            Trajectory {
                times: kept.clone(),
                positions,
                seed: cfg.rng_seed,
                index: i as u64,
                kind: TrajectoryKind::Nelson,
                node_hits,
            }
        })
        .collect();
    Ok(TrajectoryEnsemble { kind: TrajectoryKind::Nelson, dim, times: kept, trajectories })
}
