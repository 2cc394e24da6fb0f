//! Sampling, binned densities, chi-square equilibrium tests and the
//! coarse-grained H-function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::EvolutionTrace;
use crate::error::{Error, Result};
use crate::grid_field::{Axis, Grid};
use crate::trajectories::{Point, TrajectoryEnsemble};

/// Smallest expected count per chi-square group.
pub const MIN_EXPECTED: f64 = 5.0;
/// Verdict threshold on the chi-square p-value.
pub const PASS_P_VALUE: f64 = 0.01;
/// Ensembles smaller than this are not tested.
pub const MIN_ENSEMBLE: usize = 1000;

/// Draw `n` i.i.d. positions from a gridded density. Each grid value is the
/// density on the cell centred at its point; a cell is chosen by inverse CDF
/// and the position jittered uniformly inside it.
pub fn sample_density(grid: &Grid, rho: &[f64], n: usize, seed: u64) -> Result<Vec<Point>> {
    let cdf = cumulative(grid, rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let total = *cdf.last().expect("grid is nonempty");
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let cell = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let mut p = grid.point(cell);
        for (a, x) in p.iter_mut().enumerate().take(dim) {
            let jitter: f64 = rng.random::<f64>() - 0.5;
            *x += jitter * grid.axis(a).spacing();
        }
        out.push(grid.wrap_point(p));
    }
    Ok(out)
}

fn cumulative(grid: &Grid, rho: &[f64]) -> Result<Vec<f64>> {
    if rho.len() != grid.len() {
        return Err(Error::InvalidInput("density does not match the grid".into()));
    }
    if let Some(v) = rho.iter().find(|v| !v.is_finite() || **v < -1e-12) {
        return Err(Error::InvalidInput(format!("density has an invalid entry {v}")));
    }
    let dv = grid.cell_volume();
    let mut acc = 0.0;
    let cdf: Vec<f64> = rho
        .iter()
        .map(|&r| {
            acc += r.max(0.0) * dv;
            acc
        })
        .collect();
    if (acc - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!("density integrates to {acc}, expected 1")));
    }
    Ok(cdf)
}

/// Marginal of a gridded density along `axis` (the density itself on a line).
pub fn marginal(grid: &Grid, rho: &[f64], axis: usize) -> Result<Vec<f64>> {
    if rho.len() != grid.len() || axis >= grid.dim() {
        return Err(Error::InvalidInput("density or axis does not match the grid".into()));
    }
    if grid.dim() == 1 {
        return Ok(rho.to_vec());
    }
    let other = 1 - axis;
    let d = grid.axis(other).spacing();
    let mut out = vec![0.0; grid.axis(axis).n];
    for (idx, r) in rho.iter().enumerate() {
        out[grid.unravel(idx)[axis]] += r * d;
    }
    Ok(out)
}

/// Uniform bins on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Binning {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins < 10 {
            return Err(Error::InvalidInput(format!("need at least 10 bins, got {bins}")));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("empty bin range [{lo}, {hi})")));
        }
        Ok(Self { lo, hi, bins })
    }

    /// Bins covering a whole periodic axis.
    pub fn over_axis(axis: &Axis, bins: usize) -> Result<Self> {
        Self::new(-0.5 * axis.length, 0.5 * axis.length, bins)
    }

    /// Coarse bins; unlike [`Binning::new`] any positive count is allowed.
    pub fn coarse(axis: &Axis, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidInput("need at least one bin".into()));
        }
        Ok(Self { lo: -0.5 * axis.length, hi: 0.5 * axis.length, bins })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins).map(|i| self.lo + i as f64 * self.width()).collect()
    }

    pub fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.bins - 1))
    }

    fn counts(&self, samples: &[f64]) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.bins];
        for &x in samples {
            let i = self
                .index(x)
                .ok_or_else(|| Error::InvalidInput(format!("sample {x} outside [{}, {})", self.lo, self.hi)))?;
            counts[i] += 1;
        }
        Ok(counts)
    }

    /// Probability of each bin under a gridded density on `axis`, with the
    /// density constant on the cell centred at each grid point. Normalized
    /// over the bins.
    pub fn probabilities(&self, axis: &Axis, rho: &[f64]) -> Result<Vec<f64>> {
        if rho.len() != axis.n {
            return Err(Error::InvalidInput("density does not match the axis".into()));
        }
        let dx = axis.spacing();
        let (lo_dom, hi_dom) = (-0.5 * axis.length, 0.5 * axis.length);
        let mut p = vec![0.0; self.bins];
        let w = self.width();
        let mut deposit = |a: f64, b: f64, density: f64| {
            let a = a.max(self.lo);
            let b = b.min(self.hi);
            if !(b > a) {
                return;
            }
            let first = ((a - self.lo) / w).floor() as usize;
            let last = (((b - self.lo) / w).ceil() as usize).min(self.bins);
            for (i, pi) in p.iter_mut().enumerate().take(last).skip(first) {
                let lo = self.lo + i as f64 * w;
                let overlap = b.min(lo + w) - a.max(lo);
                if overlap > 0.0 {
                    *pi += density * overlap;
                }
            }
        };
        for (j, &r) in rho.iter().enumerate() {
            let r = r.max(0.0);
            let (a, b) = (axis.coord(j) - 0.5 * dx, axis.coord(j) + 0.5 * dx);
            if a < lo_dom {
                deposit(a + axis.length, hi_dom, r);
                deposit(lo_dom, b, r);
            } else if b > hi_dom {
                deposit(a, hi_dom, r);
                deposit(lo_dom, b - axis.length, r);
            } else {
                deposit(a, b, r);
            }
        }
        let total: f64 = p.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("density has no mass inside the bins".into()));
        }
        Ok(p.into_iter().map(|v| v / total).collect())
    }
}

/// Histogram of 1D samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `counts / (n_samples * bin_width)`.
    pub density: Vec<f64>,
    pub n_samples: usize,
}

pub fn estimate_density(samples: &[f64], binning: &Binning) -> Result<DensityEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    if binning.bins < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 bins, got {}", binning.bins)));
    }
    let counts = binning.counts(samples)?;
    let norm = samples.len() as f64 * binning.width();
    Ok(DensityEstimate {
        edges: binning.edges(),
        density: counts.iter().map(|&c| c as f64 / norm).collect(),
        counts,
        n_samples: samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub chi2: f64,
    /// Merged groups minus one.
    pub dof: usize,
    pub p_value: f64,
    /// Largest `|empirical - expected|` bin density.
    pub max_deviation: f64,
    pub n_samples: usize,
    /// `p_value > 0.01`.
    pub pass: bool,
}

/// Pearson chi-square of `counts` against bin probabilities, after merging
/// neighbouring bins until every group expects at least five counts.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> Result<(f64, usize, f64)> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::InvalidInput("counts and probabilities differ in length".into()));
    }
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs += c as f64;
        exp += p * n;
        if exp >= MIN_EXPECTED {
            groups.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if obs > 0.0 || exp > 0.0 {
        match groups.last_mut() {
            Some(g) => {
                g.0 += obs;
                g.1 += exp;
            }
            None => groups.push((obs, exp)),
        }
    }
    if groups.len() < 2 {
        return Err(Error::InvalidInput("fewer than two chi-square groups after merging".into()));
    }
    let chi2: f64 = groups.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = groups.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let p = dist.sf(chi2).clamp(0.0, 1.0);
    Ok((chi2, dof, p))
}

/// Goodness of fit of 1D samples against a gridded density on `axis`.
pub fn equilibrium_test(samples: &[f64], axis: &Axis, rho: &[f64], bins: usize) -> Result<EquilibriumReport> {
    let binning = Binning::over_axis(axis, bins)?;
    let est = estimate_density(samples, &binning)?;
    let probs = binning.probabilities(axis, rho)?;
    let (chi2, dof, p_value) = chi_square(&est.counts, &probs)?;
    let w = binning.width();
    let max_deviation = est
        .density
        .iter()
        .zip(&probs)
        .map(|(d, p)| (d - p / w).abs())
        .fold(0.0, f64::max);
    Ok(EquilibriumReport { chi2, dof, p_value, max_deviation, n_samples: samples.len(), pass: p_value > PASS_P_VALUE })
}

/// Chi-square test of an ensemble at recorded time `t_index` against a
/// target density, along `axis` (the marginal on a plane).
pub fn equivariance_test(
    ens: &TrajectoryEnsemble,
    grid: &Grid,
    target_rho: &[f64],
    t_index: usize,
    bins: usize,
    axis: usize,
) -> Result<EquilibriumReport> {
    if ens.len() < MIN_ENSEMBLE {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_ENSEMBLE} trajectories, got {}",
            ens.len()
        )));
    }
    if t_index >= ens.times.len() {
        return Err(Error::InvalidInput(format!("time index {t_index} out of range")));
    }
    let rho = marginal(grid, target_rho, axis)?;
    equilibrium_test(&ens.coordinate_at(t_index, axis), grid.axis(axis), &rho, bins)
}

/// `|psi|^2` at time `t`, blending bracketing snapshots linearly in `psi`.
fn density_at(trace: &EvolutionTrace, t: f64) -> Vec<f64> {
    let s = &trace.snapshots;
    let hi = s.partition_point(|f| f.t() < t - 1e-12);
    if hi == 0 {
        return s[0].density();
    }
    if hi >= s.len() {
        return s[s.len() - 1].density();
    }
    let (a, b) = (&s[hi - 1], &s[hi]);
    if (b.t() - t).abs() < 1e-12 {
        return b.density();
    }
    let alpha = (t - a.t()) / (b.t() - a.t());
    a.values().iter().zip(b.values()).map(|(x, y)| (x * (1.0 - alpha) + y * alpha).norm_sqr()).collect()
}

/// Coarse-grained `H(t) = sum rho_bar ln(rho_bar / |psi|^2_bar) Delta` over
/// `coarse_bins` bins of the axis-0 marginal, one value per recorded time.
pub fn relaxation_h_function(
    ens: &TrajectoryEnsemble,
    trace: &EvolutionTrace,
    coarse_bins: usize,
) -> Result<Vec<(f64, f64)>> {
    if ens.is_empty() {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    let grid = trace.grid();
    let axis = grid.axis(0);
    let binning = Binning::coarse(axis, coarse_bins)?;
    let n = ens.len() as f64;
    let mut out = Vec::with_capacity(ens.times.len());
    for (k, &t) in ens.times.iter().enumerate() {
        let counts = binning.counts(&ens.coordinate_at(k, 0))?;
        let rho = marginal(grid, &density_at(trace, t), 0)?;
        let probs = binning.probabilities(axis, &rho)?;
        let h: f64 = counts
            .iter()
            .zip(&probs)
            .filter(|(c, _)| **c > 0)
            .map(|(&c, &p)| {
                let q = c as f64 / n;
                q * (q / p.max(f64::MIN_POSITIVE)).ln()
            })
            .sum();
        debug_assert!(h >= -1e-9, "coarse-grained H below zero: {h}");
        out.push((t, h));
    }
    Ok(out)
}
