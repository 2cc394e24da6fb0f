//! A heavy pointer coupled to a system in a superposition of separated
//! packets, followed by free amplification.
//!
//! The Hamiltonian is `p_x^2/2m + p_y^2/2M + g(t) x p_y` with `g(t) = g` on
//! `[0, T_c)`. The interaction generates a translation of the pointer by
//! `g x t`, applied exactly in the `k_y` representation. After decoupling the
//! branches `c_k phi_k(x) chi(y - g x_k T_c)` separate in `y`; particles
//! are assigned to the branch whose pointer center is nearest.

use serde::{Deserialize, Serialize};

use crate::dynamics::{drive, EvolutionTrace, SplitStepper};
use crate::ensemble::{marginal, sample_density, EquilibriumReport, MIN_ENSEMBLE, equilibrium_test};
use crate::error::{Error, Result};
use crate::grid_field::{Grid, PhysicalParams, Wavefunction};
use crate::trajectories::{
    integrate_bohmian, integrate_nelson, Guidance, IntegrationOptions, LinearCoupling, SdeConfig, TrajectoryEnsemble,
    TrajectoryKind,
};
use crate::C64;

/// Largest tolerated overlap of branch pointer distributions.
pub const MAX_BRANCH_OVERLAP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointerModel {
    /// Domain lengths along the system (`x`) and pointer (`y`) axes.
    pub lengths: [f64; 2],
    pub points: [usize; 2],
    /// `|c_k|^2`, summing to one.
    pub branch_probabilities: Vec<f64>,
    /// Phases of `c_k`; empty means all zero.
    pub branch_phases: Vec<f64>,
    pub system_centers: Vec<f64>,
    /// Density standard deviation of each system packet.
    pub system_width: f64,
    /// Density standard deviation of the pointer ready state.
    pub pointer_width: f64,
    pub system_mass: f64,
    pub pointer_mass: f64,
    pub hbar: f64,
    pub coupling: f64,
    pub coupling_time: f64,
    /// Free evolution after decoupling.
    pub amplification_time: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    /// Step of the particle integrators; must divide `dt * snapshot_stride`.
    pub trajectory_dt: f64,
    /// Smallest acceptable distance between branch pointer centers.
    pub delta_y_min: f64,
}

impl Default for PointerModel {
    fn default() -> Self {
        Self {
            lengths: [16.0, 16.0],
            points: [128, 128],
            branch_probabilities: vec![0.5, 0.5],
            branch_phases: Vec::new(),
            system_centers: vec![-2.5, 2.5],
            system_width: 0.35,
            pointer_width: 0.35,
            system_mass: 1.0,
            pointer_mass: 50.0,
            hbar: 1.0,
            coupling: 6.4,
            coupling_time: 0.25,
            amplification_time: 0.5,
            dt: 1e-3,
            snapshot_stride: 10,
            trajectory_dt: 1e-3,
            delta_y_min: 2.0,
        }
    }
}

impl PointerModel {
    /// Two branches with `|c_A|^2 = p_a` and default geometry.
    pub fn two_branch(p_a: f64) -> Result<Self> {
        let m = Self { branch_probabilities: vec![p_a, 1.0 - p_a], ..Self::default() };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.branch_probabilities.len();
        if k < 2 || self.system_centers.len() != k {
            return Err(Error::InvalidParams("need at least two branches, one center each".into()));
        }
        if !self.branch_phases.is_empty() && self.branch_phases.len() != k {
            return Err(Error::InvalidParams("one phase per branch".into()));
        }
        if self.branch_probabilities.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidParams("branch probabilities must be positive".into()));
        }
        let total: f64 = self.branch_probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("branch probabilities sum to {total}")));
        }
        let positive = [
            self.system_width,
            self.pointer_width,
            self.system_mass,
            self.pointer_mass,
            self.hbar,
            self.coupling_time,
            self.amplification_time,
            self.dt,
            self.trajectory_dt,
            self.delta_y_min,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || !self.coupling.is_finite() {
            return Err(Error::InvalidParams("widths, masses, times and steps must be positive".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParams("snapshot_stride must be at least 1".into()));
        }
        for t in [self.coupling_time, self.amplification_time] {
            let r = t / self.dt;
            if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::InvalidParams("dt must divide the coupling and amplification times".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::plane(self.lengths, self.points)
    }

    fn coupling_steps(&self) -> usize {
        (self.coupling_time / self.dt).round() as usize
    }

    fn total_steps(&self) -> usize {
        self.coupling_steps() + (self.amplification_time / self.dt).round() as usize
    }

    pub fn amplitudes(&self) -> Vec<C64> {
        self.branch_probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| C64::from_polar(p.sqrt(), self.branch_phases.get(i).copied().unwrap_or(0.0)))
            .collect()
    }

    /// Normalized product state `phi_k(x) chi(y)` of one branch.
    pub fn branch_state(&self, k: usize) -> Result<Wavefunction> {
        let grid = self.grid()?;
        let (xc, sx, sy) = (self.system_centers[k], self.system_width, self.pointer_width);
        Wavefunction::from_fn(&grid, |p| {
            C64::new((-(p[0] - xc).powi(2) / (4.0 * sx * sx) - p[1] * p[1] / (4.0 * sy * sy)).exp(), 0.0)
        })
        .normalized()
    }

    /// `sum_k c_k phi_k(x) chi(y)`.
    pub fn initial_state(&self) -> Result<Wavefunction> {
        let amps = self.amplitudes();
        let mut total = self.branch_state(0)?;
        total.values_mut().iter_mut().for_each(|z| *z *= amps[0]);
        for (k, c) in amps.iter().enumerate().skip(1) {
            let b = self.branch_state(k)?;
            total.values_mut().iter_mut().zip(b.values()).for_each(|(z, v)| *z += c * v);
        }
        total.normalized()
    }

    pub fn guidance(&self) -> Result<Guidance> {
        Guidance::new(self.hbar, vec![self.system_mass, self.pointer_mass])?.with_coupling(LinearCoupling {
            source_axis: 0,
            target_axis: 1,
            strength: self.coupling,
            window: (0.0, self.coupling_time),
        })
    }

    /// Evolve `psi0` through coupling and amplification.
    fn evolve(&self, psi0: &Wavefunction, stride: usize) -> Result<EvolutionTrace> {
        let grid = psi0.grid().clone();
        let params = PhysicalParams::quantum(self.system_mass, self.hbar)?;
        let masses = [self.system_mass, self.pointer_mass];
        for (a, m) in masses.iter().enumerate() {
            let limit = grid.axis(a).spacing().powi(2) * m / (std::f64::consts::PI * self.hbar);
            if self.dt > limit {
                return Err(Error::InvalidParams(format!("dt = {} exceeds the sampling limit {limit}", self.dt)));
            }
        }
        let stepper = SplitStepper::new(&grid, params, &masses, vec![0.0; grid.len()], self.dt)?;
        let x: Vec<f64> = (0..grid.len()).map(|i| grid.point(i)[0]).collect();
        let spectral = stepper.spectral();
        let half = 0.5 * self.dt * self.coupling;
        let n_couple = self.coupling_steps();
        let steps = self.total_steps();
        let t_c = n_couple as f64 * self.dt;
        drive(psi0, steps, self.dt, stride, 1e-6, None, &stepper, |t, psi| {
            // exp(-i g x k_y dt/2) shifts the pointer by g x dt/2
            let coupled = t < t_c - 0.5 * self.dt;
            if coupled {
                spectral.apply_axis(psi, 1, |k, idx| C64::from_polar(1.0, -half * x[idx] * k));
            }
            stepper.step(psi);
            if coupled {
                spectral.apply_axis(psi, 1, |k, idx| C64::from_polar(1.0, -half * x[idx] * k));
            }
        })
    }

    /// Run the wave evolution once; particles can then be sampled repeatedly.
    pub fn prepare(&self) -> Result<PreparedMeasurement> {
        self.validate()?;
        let total = self.initial_state()?;
        let trace = self.evolve(&total, self.snapshot_stride)?;
        let steps = self.total_steps();
        let branches = (0..self.branch_probabilities.len())
            .map(|k| self.evolve(&self.branch_state(k)?, steps).map(|t| t.last().clone()))
            .collect::<Result<Vec<_>>>()?;
        PreparedMeasurement::new(self.clone(), trace, branches)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    Branch(usize),
    Ambiguous,
}

/// Nearest pointer center; within `delta_y_min / 10` of the midpoint between
/// the two nearest centers the outcome is ambiguous.
pub fn branch_assign(y: f64, centers: &[f64], delta_y_min: f64) -> Result<Assignment> {
    if centers.len() < 2 {
        return Err(Error::InvalidInput("need at least two branch centers".into()));
    }
    for (i, a) in centers.iter().enumerate() {
        for b in &centers[i + 1..] {
            if (a - b).abs() <= delta_y_min {
                return Err(Error::InvalidInput(format!("branch centers {a} and {b} closer than {delta_y_min}")));
            }
        }
    }
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&i, &j| (centers[i] - y).abs().total_cmp(&(centers[j] - y).abs()));
    let (best, second) = (order[0], order[1]);
    let mid = 0.5 * (centers[best] + centers[second]);
    if (y - mid).abs() < delta_y_min / 10.0 {
        return Ok(Assignment::Ambiguous);
    }
    Ok(Assignment::Branch(best))
}

/// Overlap `int min(p_a, p_b) dy` of two normalized 1D densities.
fn overlap(a: &[f64], b: &[f64], dy: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.min(*y)).sum::<f64>() * dy
}

/// Wave evolution of a pointer model plus the per-branch reference data.
pub struct PreparedMeasurement {
    model: PointerModel,
    trace: EvolutionTrace,
    branches: Vec<Wavefunction>,
    centers: Vec<f64>,
    overlap: f64,
    norm_drift: f64,
    branch_norm_drift: f64,
}

impl PreparedMeasurement {
    fn new(model: PointerModel, trace: EvolutionTrace, branches: Vec<Wavefunction>) -> Result<Self> {
        let grid = trace.grid().clone();
        let dy = grid.axis(1).spacing();
        let marginals: Vec<Vec<f64>> =
            branches.iter().map(|b| marginal(&grid, &b.density(), 1)).collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        for i in 0..marginals.len() {
            for j in i + 1..marginals.len() {
                worst = worst.max(overlap(&marginals[i], &marginals[j], dy));
            }
        }
        if worst > MAX_BRANCH_OVERLAP {
            return Err(Error::BranchOverlap { overlap: worst });
        }
        let centers: Vec<f64> = branches.iter().map(|b| b.moments(1).0).collect();

        let norm_drift = trace.diagnostics.iter().map(|d| (d.norm - 1.0).abs()).fold(0.0, f64::max);
        // probability in each pointer region after decoupling
        let regions: Vec<usize> = (0..grid.axis(1).n)
            .map(|j| {
                let y = grid.axis(1).coord(j);
                let mut best = 0;
                for (k, c) in centers.iter().enumerate() {
                    if (c - y).abs() < (centers[best] - y).abs() {
                        best = k;
                    }
                }
                best
            })
            .collect();
        let mut branch_norm_drift = 0.0f64;
        let mut first: Option<Vec<f64>> = None;
        for s in trace.snapshots.iter().filter(|s| s.t() >= model.coupling_time - 1e-12) {
            let m = marginal(&grid, &s.density(), 1)?;
            let mut mass = vec![0.0; centers.len()];
            for (j, p) in m.iter().enumerate() {
                mass[regions[j]] += p * dy;
            }
            match &first {
                None => first = Some(mass),
                Some(f) => {
                    for (a, b) in f.iter().zip(&mass) {
                        branch_norm_drift = branch_norm_drift.max((a - b).abs());
                    }
                }
            }
        }
        Ok(Self { model, trace, branches, centers, overlap: worst, norm_drift, branch_norm_drift })
    }

    pub fn trace(&self) -> &EvolutionTrace {
        &self.trace
    }

    pub fn model(&self) -> &PointerModel {
        &self.model
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Final state of each branch, evolved on its own and normalized.
    pub fn branch_states(&self) -> &[Wavefunction] {
        &self.branches
    }

    /// Sample `n` particles from `|psi_0|^2`, integrate them, and assign outcomes.
    pub fn sample(&self, kind: TrajectoryKind, n: usize, seed: u64) -> Result<(OutcomeReport, TrajectoryEnsemble)> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one trajectory".into()));
        }
        let model = &self.model;
        let grid = self.trace.grid();
        let q0 = sample_density(grid, &self.trace.first().density(), n, seed)?;
        let guidance = model.guidance()?;
        let ens = match kind {
            TrajectoryKind::Bohmian => integrate_bohmian(
                &self.trace,
                &q0,
                model.trajectory_dt,
                &guidance,
                &IntegrationOptions { record_stride: self.record_stride(), ..Default::default() },
            )?,
            TrajectoryKind::Nelson => {
                let cfg = SdeConfig {
                    record_stride: self.record_stride(),
                    ..SdeConfig::new(model.trajectory_dt, seed)
                };
                integrate_nelson(&self.trace, &q0, &cfg, &guidance)?
            }
        };
        let report = self.report(kind, seed, &ens)?;
        Ok((report, ens))
    }

    /// Record particles at every snapshot.
    fn record_stride(&self) -> usize {
        ((self.model.dt * self.model.snapshot_stride as f64) / self.model.trajectory_dt).round().max(1.0) as usize
    }

    fn report(&self, kind: TrajectoryKind, seed: u64, ens: &TrajectoryEnsemble) -> Result<OutcomeReport> {
        let model = &self.model;
        let k = self.centers.len();
        let last = ens.times.len() - 1;
        let mut counts = vec![0usize; k];
        let mut ambiguous = 0;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, tr) in ens.trajectories.iter().enumerate() {
            match branch_assign(tr.positions[last][1], &self.centers, model.delta_y_min)? {
                Assignment::Branch(b) => {
                    counts[b] += 1;
                    members[b].push(i);
                }
                Assignment::Ambiguous => ambiguous += 1,
            }
        }
        let assigned = (ens.len() - ambiguous) as f64;
        let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / assigned.max(1.0)).collect();
        let sigma: Vec<f64> =
            model.branch_probabilities.iter().map(|p| (p * (1.0 - p) / assigned.max(1.0)).sqrt()).collect();
        let within_3_sigma = frequencies
            .iter()
            .zip(&model.branch_probabilities)
            .zip(&sigma)
            .map(|((f, p), s)| (f - p).abs() <= 3.0 * s)
            .collect();
        let intervals = frequencies.iter().map(|&f| wilson_interval(f, assigned, 3.0)).collect();

        // Bohmian particles should never pass between pointer regions once the coupling is off
        let crossings = (kind == TrajectoryKind::Bohmian).then(|| {
            let start = ens.times.partition_point(|t| *t < model.coupling_time - 1e-12);
            ens.trajectories
                .iter()
                .filter(|tr| {
                    let side = |y: f64| nearest(&self.centers, y);
                    let s0 = side(tr.positions[start][1]);
                    tr.positions[start..].iter().any(|p| side(p[1]) != s0)
                })
                .count()
        });

        let grid = self.trace.grid();
        let mut conditional = Vec::with_capacity(k);
        for (b, idx) in members.iter().enumerate() {
            if idx.len() < MIN_ENSEMBLE {
                conditional.push(None);
                continue;
            }
            let rho = self.branches[b].density();
            let mut fits = Vec::with_capacity(2);
            for axis in 0..2 {
                let samples: Vec<f64> = idx.iter().map(|&i| ens.trajectories[i].positions[last][axis]).collect();
                let m = marginal(grid, &rho, axis)?;
                fits.push(equilibrium_test(&samples, grid.axis(axis), &m, 100)?);
            }
            let pointer = fits.pop().expect("two fits");
            let system = fits.pop().expect("two fits");
            conditional.push(Some(ConditionalFit { system, pointer }));
        }

        Ok(OutcomeReport {
            kind,
            seed,
            n_trajectories: ens.len(),
            branch_probabilities: model.branch_probabilities.clone(),
            counts,
            frequencies,
            sigma,
            within_3_sigma,
            intervals,
            ambiguous,
            branch_centers: self.centers.clone(),
            overlap: self.overlap,
            crossings,
            node_hits: ens.node_hits(),
            norm_drift: self.norm_drift,
            branch_norm_drift: self.branch_norm_drift,
            conditional,
        })
    }
}

fn nearest(centers: &[f64], y: f64) -> usize {
    let mut best = 0;
    for (k, c) in centers.iter().enumerate() {
        if (c - y).abs() < (centers[best] - y).abs() {
            best = k;
        }
    }
    best
}

/// Wilson score interval with `z` standard deviations.
pub fn wilson_interval(p: f64, n: f64, z: f64) -> (f64, f64) {
    if n <= 0.0 {
        return (0.0, 1.0);
    }
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Branch-conditioned particle density against the branch packet density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalFit {
    pub system: EquilibriumReport,
    pub pointer: EquilibriumReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub kind: TrajectoryKind,
    pub seed: u64,
    pub n_trajectories: usize,
    pub branch_probabilities: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts over unambiguously assigned particles.
    pub frequencies: Vec<f64>,
    /// Binomial standard deviation `sqrt(p (1 - p) / n)` around each `|c_k|^2`.
    pub sigma: Vec<f64>,
    pub within_3_sigma: Vec<bool>,
    /// 3-sigma Wilson intervals around the observed frequencies.
    pub intervals: Vec<(f64, f64)>,
    pub ambiguous: usize,
    pub branch_centers: Vec<f64>,
    pub overlap: f64,
    /// Bohmian particles that changed pointer region after decoupling.
    pub crossings: Option<usize>,
    pub node_hits: usize,
    /// Largest deviation of the total norm from one.
    pub norm_drift: f64,
    /// Largest change of any branch's pointer-region probability after decoupling.
    pub branch_norm_drift: f64,
    /// `None` for branches with fewer than 1000 particles.
    pub conditional: Vec<Option<ConditionalFit>>,
}

/// Prepare the model and sample one ensemble.
pub fn run_measurement(model: &PointerModel, n: usize, seed: u64, kind: TrajectoryKind) -> Result<OutcomeReport> {
    Ok(model.prepare()?.sample(kind, n, seed)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment() {
        let c = [-4.0, 4.0];
        assert_eq!(branch_assign(-4.0, &c, 2.0).unwrap(), Assignment::Branch(0));
        assert_eq!(branch_assign(3.1, &c, 2.0).unwrap(), Assignment::Branch(1));
        assert_eq!(branch_assign(0.0, &c, 2.0).unwrap(), Assignment::Ambiguous);
        assert_eq!(branch_assign(0.19, &c, 2.0).unwrap(), Assignment::Ambiguous);
        assert_eq!(branch_assign(0.21, &c, 2.0).unwrap(), Assignment::Branch(1));
        assert!(branch_assign(0.0, &[0.0, 1.0], 2.0).is_err());
        assert!(branch_assign(0.0, &[0.0], 2.0).is_err());
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(0.8, 10_000.0, 3.0);
        assert!(lo < 0.8 && 0.8 < hi);
        assert!((hi - lo) < 0.03);
    }

    #[test]
    fn model_validation() {
        assert!(PointerModel::two_branch(0.8).is_ok());
        assert!(PointerModel::two_branch(1.0).is_err());
        let mut m = PointerModel::default();
        m.branch_probabilities = vec![0.5, 0.6];
        assert!(m.validate().is_err());
        let mut m = PointerModel::default();
        m.dt = 0.3;
        assert!(m.validate().is_err());
    }

    #[test]
    fn initial_state_weights() {
        let m = PointerModel::two_branch(0.8).unwrap();
        let psi = m.initial_state().unwrap();
        let g = psi.grid();
        let left: f64 = psi
            .density()
            .iter()
            .enumerate()
            .filter(|(i, _)| g.point(*i)[0] < 0.0)
            .map(|(_, r)| r * g.cell_volume())
            .sum();
        assert!((left - 0.8).abs() < 1e-9);
    }
}
