use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::grid::Grid;
use super::params::PhysicalParams;
use super::spectral::Spectral;
use crate::error::{Error, Result};

/// Relative node threshold: points with `R < NODE_EPS_REL * max(R)` are nodes.
pub const NODE_EPS_REL: f64 = 1e-6;

const NORM_TOL: f64 = 1e-8;

/// Complex field on a periodic grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Grid,
    values: Vec<C64>,
    t: f64,
}

impl Wavefunction {
    pub fn new(grid: Grid, values: Vec<C64>, t: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "wavefunction has {} values, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, t })
    }

    /// Sample `f` at every grid point (not normalized).
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid: grid.clone(), values, t: 0.0 }
    }

    /// Normalized 1-d Gaussian packet whose density has standard deviation
    /// `width`, centred at `center`, carrying mean wavenumber `k0`.
    pub fn gaussian(grid: &Grid, center: f64, width: f64, k0: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidInput(format!("packet width must be positive, got {width}")));
        }
        let psi = Self::from_fn(grid, |p| {
            let d = p[0] - center;
            C64::from_polar((-d * d / (4.0 * width * width)).exp(), k0 * p[0])
        });
        psi.normalized()
    }

    /// Harmonic-oscillator ground state `exp(-m omega x^2 / 2 hbar)` (any dim).
    pub fn harmonic_ground_state(grid: &Grid, params: &PhysicalParams, omega: f64) -> Result<Self> {
        let a = params.mass * omega / (2.0 * params.hbar);
        let dim = grid.dim();
        let psi = Self::from_fn(grid, |p| {
            let r2: f64 = p[..dim].iter().map(|c| c * c).sum();
            C64::new((-a * r2).exp(), 0.0)
        });
        psi.normalized()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(C64::norm_sqr).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput(format!("cannot normalize a field with norm {n}")));
        }
        let inv = 1.0 / n;
        self.values.iter_mut().for_each(|z| *z *= inv);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_squared() - 1.0).abs() <= tol
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(C64::norm_sqr).collect()
    }

    /// Mean and variance of the position density along `axis`.
    pub fn moments(&self, axis: usize) -> (f64, f64) {
        let dv = self.grid.cell_volume();
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (i, z) in self.values.iter().enumerate() {
            let w = z.norm_sqr() * dv;
            let x = self.grid.point(i)[axis];
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
        }
        let mean = m1 / m0;
        (mean, m2 / m0 - mean * mean)
    }

    /// Multiply by a global phase `e^{i theta}`.
    pub fn with_global_phase(mut self, theta: f64) -> Self {
        let ph = C64::from_polar(1.0, theta);
        self.values.iter_mut().for_each(|z| *z *= ph);
        self
    }

    pub fn conj(mut self) -> Self {
        self.values.iter_mut().for_each(|z| *z = z.conj());
        self
    }

    /// Inner product `<self|other>` with the grid measure.
    pub fn inner(&self, other: &Self) -> C64 {
        let dv = self.grid.cell_volume();
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<C64>() * dv
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Amplitude/phase form `psi = R e^{i S / hbar}` with `S` in action units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarField {
    pub grid: Grid,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub node_mask: Vec<bool>,
    pub hbar: f64,
}

impl PolarField {
    pub fn density(&self) -> Vec<f64> {
        self.amplitude.iter().map(|r| r * r).collect()
    }

    pub fn node_count(&self) -> usize {
        self.node_mask.iter().filter(|&&m| m).count()
    }

    /// Largest `|S_i - S_j|` over lattice-adjacent non-node pairs.
    pub fn max_adjacent_phase_jump(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() {
            if self.node_mask[i] {
                continue;
            }
            for j in self.grid.neighbors(i) {
                if !self.node_mask[j] {
                    worst = worst.max((self.phase[i] - self.phase[j]).abs());
                }
            }
        }
        worst
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Split a normalized field into amplitude and unwrapped phase.
///
/// Unwrapping is a breadth-first sweep over lattice neighbours (not across the
/// periodic seam) seeded at the largest amplitude. Points with
/// `R < eps_node` (default `1e-6 max R`) are marked as nodes and inherit the
/// phase of the point they were reached from.
pub fn polar_decompose(psi: &Wavefunction, hbar: f64, eps_node: Option<f64>) -> Result<PolarField> {
    if !psi.is_normalized(NORM_TOL) {
        return Err(Error::InvalidInput(format!(
            "polar decomposition needs a normalized field (norm^2 = {})",
            psi.norm_squared()
        )));
    }
    let grid = psi.grid().clone();
    let amplitude: Vec<f64> = psi.values().iter().map(|z| z.norm()).collect();
    let (seed, rmax) = amplitude
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    let eps = eps_node.unwrap_or(NODE_EPS_REL * rmax);
    let node_mask: Vec<bool> = amplitude.iter().map(|&r| r < eps).collect();
    let nodes = node_mask.iter().filter(|&&m| m).count();
    let node_fraction = nodes as f64 / grid.len() as f64;
    if node_fraction > 0.5 {
        return Err(Error::DegeneratePhase { node_fraction });
    }

    let raw: Vec<f64> = psi.values().iter().map(|z| z.arg()).collect();
    let mut unwrapped = vec![f64::NAN; grid.len()];
    unwrapped[seed] = raw[seed];
    let mut queue = VecDeque::from([seed]);
    while let Some(i) = queue.pop_front() {
        let base = unwrapped[i];
        for j in grid.neighbors(i) {
            if !unwrapped[j].is_nan() {
                continue;
            }
            unwrapped[j] = if node_mask[j] { base } else { base + wrap_angle(raw[j] - base) };
            queue.push_back(j);
        }
    }
    let phase = unwrapped.into_iter().map(|a| hbar * a).collect();
    Ok(PolarField { grid, amplitude, phase, node_mask, hbar })
}

/// `psi = R e^{i S / hbar}`, renormalized.
pub fn polar_compose(polar: &PolarField) -> Result<Wavefunction> {
    let values = polar
        .amplitude
        .iter()
        .zip(&polar.phase)
        .map(|(&r, &s)| C64::from_polar(r, s / polar.hbar))
        .collect();
    Wavefunction::new(polar.grid.clone(), values, 0.0)?.normalized()
}

/// Quantum potential on the grid plus the points where it was clamped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumPotential {
    pub values: Vec<f64>,
    pub clamped: Vec<bool>,
}

impl QuantumPotential {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Q = -(hbar^2 / 2m) lap(R) / R` with a spectral Laplacian. Points where
/// `R < eps` take the value of the nearest point above the threshold.
pub(crate) fn quantum_potential_of_amplitude(
    spectral: &Spectral,
    amplitude: &[f64],
    eps: f64,
    hbar: f64,
    mass: f64,
) -> QuantumPotential {
    let valid: Vec<bool> = amplitude.iter().map(|&r| r >= eps && r > 0.0).collect();
    quantum_potential_masked(spectral, amplitude, &valid, hbar, mass)
}

fn quantum_potential_masked(spectral: &Spectral, amplitude: &[f64], valid: &[bool], hbar: f64, mass: f64) -> QuantumPotential {
    let lap = spectral.laplacian_real(amplitude);
    let pref = -hbar * hbar / (2.0 * mass);
    let mut values: Vec<f64> = amplitude
        .iter()
        .zip(&lap)
        .zip(valid)
        .map(|((&r, &l), &ok)| if ok { pref * l / r } else { 0.0 })
        .collect();
    let clamped: Vec<bool> = valid.iter().map(|v| !v).collect();
    if clamped.iter().any(|&c| c) {
        if let Some(src) = spectral.grid().nearest_valid(valid) {
            for i in 0..values.len() {
                if clamped[i] {
                    values[i] = values[src[i]];
                }
            }
        }
    }
    QuantumPotential { values, clamped }
}

/// Quantum potential of a polar field; depends on `R` only. Points in the
/// field's node mask are clamped.
pub fn quantum_potential(polar: &PolarField, params: &PhysicalParams) -> QuantumPotential {
    let spectral = Spectral::new(&polar.grid);
    let valid: Vec<bool> = polar
        .node_mask
        .iter()
        .zip(&polar.amplitude)
        .map(|(&m, &r)| !m && r > 0.0)
        .collect();
    quantum_potential_masked(&spectral, &polar.amplitude, &valid, params.hbar, params.mass)
}
