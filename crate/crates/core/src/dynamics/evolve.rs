use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{AbortDiagnostic, Error, Result};
use crate::grid_field::{
    io::write_slf1, quantum_potential_of_amplitude, Grid, PhysicalParams, PotentialSpec, Spectral, Wavefunction,
    NODE_EPS_REL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
    pub params: PhysicalParams,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub snapshot_stride: usize,
    /// Largest tolerated change of the norm in a single step.
    #[serde(default = "default_norm_tolerance")]
    pub norm_tolerance: f64,
    /// Largest tolerated relative drift of the conserved `lambda`-energy,
    /// checked at snapshots. Exceeding it truncates the trace (caustic guard).
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance: f64,
}

fn default_norm_tolerance() -> f64 {
    1e-6
}

fn default_energy_tolerance() -> f64 {
    1e-2
}

impl EvolutionConfig {
    pub fn new(dt: f64, steps: usize, params: PhysicalParams, potential: PotentialSpec, snapshot_stride: usize) -> Self {
        Self {
            dt,
            steps,
            params,
            potential,
            snapshot_stride,
            norm_tolerance: default_norm_tolerance(),
            energy_tolerance: default_energy_tolerance(),
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.params = self.params.with_lambda(lambda)?;
        Ok(self)
    }

    /// Check the config against a grid; `masses` gives one mass per axis.
    pub fn validate(&self, grid: &Grid, masses: &[f64]) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParams("steps must be at least 1".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParams("snapshot_stride must be at least 1".into()));
        }
        for (a, m) in grid.axes().iter().zip(masses) {
            let limit = a.spacing().powi(2) * m / (std::f64::consts::PI * self.params.hbar);
            if self.dt > limit {
                return Err(Error::InvalidParams(format!(
                    "dt = {} exceeds the kinetic sampling limit dx^2 m / (pi hbar) = {limit}",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

/// Per-snapshot health numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub norm: f64,
    /// `<psi| -(hbar^2/2m) lap + V |psi>`
    pub energy: f64,
    /// Energy conserved by the `lambda` dynamics.
    pub lambda_energy: f64,
    /// Largest `|Q|` away from nodes.
    pub max_q: f64,
    pub node_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub snapshots: Vec<Wavefunction>,
    pub diagnostics: Vec<Diagnostics>,
    pub params: PhysicalParams,
    /// Set when the run was cut short by the energy guard.
    pub truncated: Option<String>,
}

impl EvolutionTrace {
    /// Two identical frames at `0` and `t_end`, for static-field particle runs.
    pub fn frozen(psi: &Wavefunction, t_end: f64, params: PhysicalParams) -> Result<Self> {
        if !(t_end > 0.0) {
            return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
        }
        let mut a = psi.clone();
        a.set_t(0.0);
        let mut b = psi.clone();
        b.set_t(t_end);
        let spectral = Spectral::new(psi.grid());
        let v = vec![0.0; psi.grid().len()];
        let masses = vec![params.mass; psi.grid().dim()];
        let ctx = DiagContext::new(&spectral, &v, &params, &masses);
        let diagnostics = vec![ctx.measure(&a), ctx.measure(&b)];
        Ok(Self { snapshots: vec![a, b], diagnostics, params, truncated: None })
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Wavefunction::t).collect()
    }

    pub fn first(&self) -> &Wavefunction {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Wavefunction {
        self.snapshots.last().expect("a trace always holds the initial state")
    }

    pub fn grid(&self) -> &Grid {
        self.first().grid()
    }

    pub fn duration(&self) -> f64 {
        self.last().t() - self.first().t()
    }

    pub fn max_q(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.max_q).fold(0.0, f64::max)
    }

    pub fn write_slf1<W: Write>(&self, w: &mut W) -> Result<()> {
        self.snapshots.iter().try_for_each(|s| write_slf1(w, s))
    }

    pub fn write_diagnostics_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,norm,energy,lambda_energy,max_q,node_fraction")?;
        for d in &self.diagnostics {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                d.t, d.norm, d.energy, d.lambda_energy, d.max_q, d.node_fraction
            )?;
        }
        Ok(())
    }
}

/// Kinetic and potential expectation values of a (normalized) field.
fn energy_parts(spectral: &Spectral, values: &[C64], v: &[f64], hbar: f64, masses: &[f64]) -> (f64, f64) {
    let grid = spectral.grid();
    let dv = grid.cell_volume();
    let mut hat = values.to_vec();
    spectral.forward(&mut hat);
    let n = values.len() as f64;
    let mut kinetic = 0.0;
    for (idx, z) in hat.iter().enumerate() {
        let m = grid.unravel(idx);
        let t: f64 = (0..grid.dim())
            .map(|a| hbar * hbar * spectral.wavenumbers(a)[m[a]].powi(2) / (2.0 * masses[a]))
            .sum();
        kinetic += t * z.norm_sqr();
    }
    kinetic *= dv / n;
    let potential = values.iter().zip(v).map(|(z, v)| v * z.norm_sqr()).sum::<f64>() * dv;
    (kinetic, potential)
}

/// `<psi| -(hbar^2/2m) lap + V |psi>` with a spectral kinetic term.
pub fn energy_expectation(psi: &Wavefunction, potential: &PotentialSpec, params: &PhysicalParams) -> Result<f64> {
    let v = potential.evaluate(psi.grid(), params.mass)?;
    let spectral = Spectral::new(psi.grid());
    let masses = vec![params.mass; psi.grid().dim()];
    let (k, p) = energy_parts(&spectral, psi.values(), &v, params.hbar, &masses);
    Ok(k + p)
}

/// Conserved energy of the `lambda` dynamics:
/// `<T> + <V> - (1 - lambda) (hbar^2 / 2m) int |grad R|^2`.
pub fn lambda_energy(psi: &Wavefunction, potential: &PotentialSpec, params: &PhysicalParams) -> Result<f64> {
    let v = potential.evaluate(psi.grid(), params.mass)?;
    let spectral = Spectral::new(psi.grid());
    let masses = vec![params.mass; psi.grid().dim()];
    Ok(DiagContext::new(&spectral, &v, params, &masses).lambda_energy(psi.values()))
}

pub(crate) struct DiagContext<'a> {
    spectral: &'a Spectral,
    v: &'a [f64],
    params: &'a PhysicalParams,
    masses: &'a [f64],
}

impl<'a> DiagContext<'a> {
    pub(crate) fn new(spectral: &'a Spectral, v: &'a [f64], params: &'a PhysicalParams, masses: &'a [f64]) -> Self {
        Self { spectral, v, params, masses }
    }

    fn lambda_energy(&self, values: &[C64]) -> f64 {
        let (k, p) = energy_parts(self.spectral, values, self.v, self.params.hbar, self.masses);
        if self.params.lambda == 1.0 {
            return k + p;
        }
        let r: Vec<f64> = values.iter().map(|z| z.norm()).collect();
        let mut grad2 = 0.0;
        for a in 0..self.spectral.grid().dim() {
            let d = self.spectral.derivative_real(&r, a, 1).expect("order 1 is supported");
            grad2 += d.iter().map(|g| g * g).sum::<f64>() * self.params.hbar.powi(2) / (2.0 * self.masses[a]);
        }
        k + p - (1.0 - self.params.lambda) * grad2 * self.spectral.grid().cell_volume()
    }

    fn measure(&self, psi: &Wavefunction) -> Diagnostics {
        let values = psi.values();
        let (k, p) = energy_parts(self.spectral, values, self.v, self.params.hbar, self.masses);
        let r: Vec<f64> = values.iter().map(|z| z.norm()).collect();
        let rmax = r.iter().copied().fold(0.0, f64::max);
        let q = quantum_potential_of_amplitude(self.spectral, &r, NODE_EPS_REL * rmax, self.params.hbar, self.params.mass);
        let max_q = q
            .values
            .iter()
            .zip(&q.clamped)
            .filter(|(_, c)| !**c)
            .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
        let nodes = q.clamped.iter().filter(|&&c| c).count();
        Diagnostics {
            t: psi.t(),
            norm: psi.norm(),
            energy: k + p,
            lambda_energy: self.lambda_energy(values),
            max_q,
            node_fraction: nodes as f64 / values.len() as f64,
        }
    }
}

/// Strang split-step propagator for the `lambda` wave equation.
pub struct SplitStepper {
    spectral: Spectral,
    kinetic: Vec<C64>,
    potential: Vec<f64>,
    params: PhysicalParams,
    masses: Vec<f64>,
    dt: f64,
}

impl SplitStepper {
    /// `masses` gives the kinetic mass per axis; the quantum-potential
    /// correction (only active for `lambda < 1`) uses `params.mass`.
    pub fn new(grid: &Grid, params: PhysicalParams, masses: &[f64], potential: Vec<f64>, dt: f64) -> Result<Self> {
        if masses.len() != grid.dim() {
            return Err(Error::InvalidInput("need one mass per axis".into()));
        }
        if potential.len() != grid.len() {
            return Err(Error::InvalidInput("potential does not match the grid".into()));
        }
        let spectral = Spectral::new(grid);
        let kinetic = (0..grid.len())
            .map(|idx| {
                let m = grid.unravel(idx);
                let e: f64 = (0..grid.dim())
                    .map(|a| params.hbar * spectral.wavenumbers(a)[m[a]].powi(2) / (2.0 * masses[a]))
                    .sum();
                C64::from_polar(1.0, -e * dt)
            })
            .collect();
        Ok(Self { spectral, kinetic, potential, params, masses: masses.to_vec(), dt })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `exp(-i (V + (lambda - 1) Q[|psi|]) dt / 2 hbar)`, with `Q` from the current `|psi|`.
    pub fn half_potential(&self, psi: &mut [C64]) {
        let tau = 0.5 * self.dt / self.params.hbar;
        if self.params.lambda == 1.0 {
            for (z, v) in psi.iter_mut().zip(&self.potential) {
                *z *= C64::from_polar(1.0, -v * tau);
            }
            return;
        }
        let r: Vec<f64> = psi.iter().map(|z| z.norm()).collect();
        let rmax = r.iter().copied().fold(0.0, f64::max);
        let q = quantum_potential_of_amplitude(&self.spectral, &r, NODE_EPS_REL * rmax, self.params.hbar, self.params.mass);
        let c = self.params.lambda - 1.0;
        for ((z, v), q) in psi.iter_mut().zip(&self.potential).zip(&q.values) {
            *z *= C64::from_polar(1.0, -(v + c * q) * tau);
        }
    }

    pub fn kinetic_step(&self, psi: &mut [C64]) {
        self.spectral.forward(psi);
        for (z, k) in psi.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.spectral.inverse(psi);
    }

    pub fn step(&self, psi: &mut [C64]) {
        self.half_potential(psi);
        self.kinetic_step(psi);
        self.half_potential(psi);
    }
}

/// Shared stepping loop: snapshots, per-step norm guard, snapshot energy guard.
pub(crate) fn drive(
    psi0: &Wavefunction,
    steps: usize,
    dt: f64,
    stride: usize,
    norm_tolerance: f64,
    energy_tolerance: Option<f64>,
    stepper: &SplitStepper,
    mut step_fn: impl FnMut(f64, &mut [C64]),
) -> Result<EvolutionTrace> {
    let ctx = DiagContext::new(&stepper.spectral, &stepper.potential, &stepper.params, &stepper.masses);
    let mut psi = psi0.clone();
    let first = ctx.measure(&psi);
    let e0 = first.lambda_energy;
    let energy_scale = {
        let (k, p) = energy_parts(&stepper.spectral, psi.values(), &stepper.potential, stepper.params.hbar, &stepper.masses);
        e0.abs().max(k + p.abs()).max(1e-12)
    };
    let mut snapshots = vec![psi.clone()];
    let mut diagnostics = vec![first];
    let mut truncated = None;
    let t0 = psi0.t();
    let mut norm = psi.norm();

    for step in 1..=steps {
        let t_start = t0 + (step - 1) as f64 * dt;
        step_fn(t_start, psi.values_mut());
        psi.set_t(t0 + step as f64 * dt);
        let next = psi.norm();
        if !next.is_finite() || !psi.is_finite() {
            return Err(Error::NumericalAbort(AbortDiagnostic {
                step,
                t: psi.t(),
                norm_drift: f64::NAN,
                reason: "non-finite value in the field".into(),
            }));
        }
        if (next - norm).abs() > norm_tolerance {
            return Err(Error::NumericalAbort(AbortDiagnostic {
                step,
                t: psi.t(),
                norm_drift: next - norm,
                reason: "norm drift exceeded the per-step tolerance".into(),
            }));
        }
        norm = next;
        if step % stride == 0 || step == steps {
            let d = ctx.measure(&psi);
            let drift = (d.lambda_energy - e0).abs() / energy_scale;
            snapshots.push(psi.clone());
            diagnostics.push(d);
            if let Some(tol) = energy_tolerance {
                if drift > tol {
                    truncated = Some(format!(
                        "energy drift {drift:.3e} exceeded {tol:.1e} at t = {:.6} (caustic or node formation)",
                        psi.t()
                    ));
                    break;
                }
            }
        }
    }
    Ok(EvolutionTrace { snapshots, diagnostics, params: stepper.params, truncated })
}

/// Evolve `psi0` under the `lambda` wave equation with a Strang split-step.
pub fn evolve(psi0: &Wavefunction, cfg: &EvolutionConfig) -> Result<EvolutionTrace> {
    let grid = psi0.grid();
    let masses = vec![cfg.params.mass; grid.dim()];
    cfg.validate(grid, &masses)?;
    if !psi0.is_normalized(1e-8) {
        return Err(Error::InvalidInput(format!(
            "initial state is not normalized (norm^2 = {})",
            psi0.norm_squared()
        )));
    }
    let v = cfg.potential.evaluate(grid, cfg.params.mass)?;
    let stepper = SplitStepper::new(grid, cfg.params, &masses, v, cfg.dt)?;
    drive(
        psi0,
        cfg.steps,
        cfg.dt,
        cfg.snapshot_stride,
        cfg.norm_tolerance,
        Some(cfg.energy_tolerance),
        &stepper,
        |_, psi| stepper.step(psi),
    )
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn unit() -> PhysicalParams {
        PhysicalParams::quantum(1.0, 1.0).unwrap()
    }

    #[test]
    fn ground_state_energy() {
        let g = Grid::line(20.0, 256).unwrap();
        let psi = Wavefunction::harmonic_ground_state(&g, &unit(), 1.0).unwrap();
        let e = energy_expectation(&psi, &PotentialSpec::Harmonic { omega: 1.0 }, &unit()).unwrap();
        assert!((e - 0.5).abs() < 1e-8, "{e}");
    }

    #[test]
    fn plane_wave_energy() {
        let l = 20.0;
        let g = Grid::line(l, 128).unwrap();
        let k = 2.0 * PI * 5.0 / l;
        let p = PhysicalParams::quantum(1.5, 0.8).unwrap();
        let psi = Wavefunction::from_fn(&g, |x| C64::from_polar(1.0, k * x[0])).normalized().unwrap();
        let e = energy_expectation(&psi, &PotentialSpec::Free, &p).unwrap();
        assert!((e - p.hbar * p.hbar * k * k / (2.0 * p.mass)).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_configs() {
        let g = Grid::line(40.0, 512).unwrap();
        let psi = Wavefunction::gaussian(&g, 0.0, 1.0, 0.0).unwrap();
        let mut cfg = EvolutionConfig::new(0.01, 10, unit(), PotentialSpec::Free, 1);
        assert!(matches!(evolve(&psi, &cfg), Err(Error::InvalidParams(_))));
        cfg.dt = 1e-3;
        cfg.steps = 0;
        assert!(evolve(&psi, &cfg).is_err());
        cfg.steps = 2;
        let unnormalized = Wavefunction::new(g.clone(), vec![C64::new(1.0, 0.0); 512], 0.0).unwrap();
        assert!(evolve(&unnormalized, &cfg).is_err());
    }

    #[test]
    fn snapshots_include_initial_and_final() {
        let g = Grid::line(40.0, 256).unwrap();
        let psi = Wavefunction::gaussian(&g, 0.0, 1.0, 0.0).unwrap();
        let cfg = EvolutionConfig::new(1e-3, 25, unit(), PotentialSpec::Free, 10);
        let tr = evolve(&psi, &cfg).unwrap();
        let t = tr.times();
        assert_eq!(t.len(), 4);
        assert_eq!(t[0], 0.0);
        assert!((t[3] - 0.025).abs() < 1e-15);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn unitary_at_lambda_one() {
        let g = Grid::line(40.0, 512).unwrap();
        let psi = Wavefunction::gaussian(&g, -2.0, 1.0, 1.5).unwrap();
        let cfg = EvolutionConfig::new(1e-3, 200, unit(), PotentialSpec::Harmonic { omega: 1.0 }, 1);
        let tr = evolve(&psi, &cfg).unwrap();
        for w in tr.diagnostics.windows(2) {
            assert!((w[1].norm - w[0].norm).abs() < 1e-10);
        }
    }

    #[test]
    fn norm_preserved_below_lambda_one() {
        let g = Grid::line(40.0, 512).unwrap();
        let psi = Wavefunction::gaussian(&g, 0.0, 1.0, 0.7).unwrap();
        let cfg = EvolutionConfig::new(1e-3, 200, unit().with_lambda(0.3).unwrap(), PotentialSpec::Free, 1);
        let tr = evolve(&psi, &cfg).unwrap();
        assert!(tr.truncated.is_none());
        for w in tr.diagnostics.windows(2) {
            assert!((w[1].norm - w[0].norm).abs() < 1e-8);
        }
    }
}
