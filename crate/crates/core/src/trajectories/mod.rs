//! Particle paths driven by wavefunction frames.
//!
//! Bohmian particles follow `v = (hbar/m) Im(grad psi / psi)` and are
//! integrated with RK4. Nelson particles diffuse with `nu = hbar / 2m` around
//! the forward drift `b = v + u`, `u = (hbar/m) Re(grad psi / psi)
//! = (hbar/2m) grad rho / rho`, integrated with Euler-Maruyama.
//!
//! The velocity is computed from the log-derivative of `psi` instead of a
//! finite difference of the unwrapped phase. The two agree wherever the phase
//! is smooth and the former has no seam at branch cuts.

mod integrate;
mod velocity;

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_field::PhysicalParams;

pub use integrate::{integrate_bohmian, integrate_nelson, DriftMode, IntegrationOptions, SdeConfig};
pub use velocity::{bohm_velocity, nelson_drift, FrameSample, FrameSeries, VelocityField};

/// Position on a line or plane; the second entry is unused on a line.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Bohmian,
    Nelson,
}

/// How fields are evaluated between grid points.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Linear (bilinear in 2D) interpolation of grid values.
    #[default]
    Linear,
    /// Trigonometric interpolation from the Fourier coefficients. Exact for
    /// band-limited fields, `O(N)` per evaluation.
    SpectralEval,
}

/// Interaction term `g(t) x_source p_target` of a von Neumann coupling,
/// which adds `g x_source` to the velocity along `target_axis` while
/// `window.0 <= t < window.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCoupling {
    pub source_axis: usize,
    pub target_axis: usize,
    pub strength: f64,
    pub window: (f64, f64),
}

impl LinearCoupling {
    #[inline]
    pub fn active(&self, t: f64) -> bool {
        self.window.0 <= t && t < self.window.1
    }
}

/// Everything besides the field itself that enters the velocity law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guidance {
    pub hbar: f64,
    /// One mass per axis.
    pub masses: Vec<f64>,
    pub coupling: Option<LinearCoupling>,
}

impl Guidance {
    pub fn new(hbar: f64, masses: Vec<f64>) -> Result<Self> {
        let g = Self { hbar, masses, coupling: None };
        g.validate()?;
        Ok(g)
    }

    /// Same mass on every axis.
    pub fn from_params(params: &PhysicalParams, dim: usize) -> Self {
        Self { hbar: params.hbar, masses: vec![params.mass; dim], coupling: None }
    }

    pub fn with_coupling(mut self, coupling: LinearCoupling) -> Result<Self> {
        self.coupling = Some(coupling);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) || self.masses.is_empty() || self.masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidParams("hbar and all masses must be positive".into()));
        }
        if let Some(c) = &self.coupling {
            let d = self.masses.len();
            if c.source_axis >= d || c.target_axis >= d || !c.strength.is_finite() {
                return Err(Error::InvalidParams("coupling axes out of range".into()));
            }
        }
        Ok(())
    }

    /// Nelson diffusion constant `hbar / 2m` along `axis`.
    pub fn diffusion(&self, axis: usize) -> f64 {
        self.hbar / (2.0 * self.masses[axis])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Shared with every trajectory of the ensemble.
    pub times: Arc<Vec<f64>>,
    pub positions: Vec<Point>,
    /// RNG seed of the ensemble (0 for Bohmian runs).
    pub seed: u64,
    /// RNG stream and position in the initial list.
    pub index: u64,
    pub kind: TrajectoryKind,
    /// Number of velocity evaluations that fell back to a nearest valid point.
    pub node_hits: usize,
}

impl Trajectory {
    pub fn last(&self) -> Point {
        *self.positions.last().expect("a trajectory holds its initial point")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub kind: TrajectoryKind,
    pub dim: usize,
    pub times: Arc<Vec<f64>>,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Index of the recorded time closest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn positions_at(&self, t_index: usize) -> Vec<Point> {
        self.trajectories.iter().map(|tr| tr.positions[t_index]).collect()
    }

    /// One coordinate of every particle at a recorded time.
    pub fn coordinate_at(&self, t_index: usize, axis: usize) -> Vec<f64> {
        self.trajectories.iter().map(|tr| tr.positions[t_index][axis]).collect()
    }

    pub fn node_hits(&self) -> usize {
        self.trajectories.iter().map(|t| t.node_hits).sum()
    }

    /// CSV with columns `traj_id,t,x[,y]`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.dim == 1 {
            writeln!(w, "traj_id,t,x")?;
        } else {
            writeln!(w, "traj_id,t,x,y")?;
        }
        for tr in &self.trajectories {
            for (t, p) in self.times.iter().zip(&tr.positions) {
                if self.dim == 1 {
                    writeln!(w, "{},{:e},{:e}", tr.index, t, p[0])?;
                } else {
                    writeln!(w, "{},{:e},{:e},{:e}", tr.index, t, p[0], p[1])?;
                }
            }
        }
        Ok(())
    }
}
