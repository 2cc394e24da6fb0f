use sllab_core::dynamics::{evolve, EvolutionConfig, EvolutionTrace};
use sllab_core::ensemble::{
    equilibrium_test, equivariance_test, estimate_density, relaxation_h_function, sample_density, Binning,
    EquilibriumReport, PASS_P_VALUE,
};
use sllab_core::grid_field::{Grid, PhysicalParams, PotentialSpec, Wavefunction};
use sllab_core::trajectories::{
    integrate_bohmian, integrate_nelson, DriftMode, Guidance, IntegrationOptions, SdeConfig, TrajectoryEnsemble,
    TrajectoryKind,
};
use sllab_core::C64;

use super::{csv, steps_for, Summary};
use crate::config::{Equivariance, NelsonBorn, Relaxation};
use crate::error::{CliError, CliResult};
use crate::output::Artifacts;
use crate::plot::{line_plot, trajectory_plot, Figure, HeatStrip, Series, Style};

/// Fraction of seeds that must pass the equivariance test (18 of 20).
pub const EQUIVARIANCE_PASS_FRACTION: f64 = 0.9;
/// The driftless control must be rejected at least this strongly.
pub const CONTROL_P_VALUE: f64 = 1e-6;
/// Largest number of heat-map columns in trajectory plots.
const HEAT_COLUMNS: usize = 60;

fn paths_csv(ens: &TrajectoryEnsemble, count: usize) -> String {
    let header = if ens.dim == 1 { "traj_id,t,x" } else { "traj_id,t,x,y" };
    csv(
        header,
        ens.trajectories.iter().take(count).enumerate().flat_map(|(id, tr)| {
            tr.times.iter().zip(&tr.positions).map(move |(&t, q)| {
                let mut row = vec![id as f64, t];
                row.extend_from_slice(&q[..ens.dim]);
                row
            })
        }),
    )
}

fn paths_along(ens: &TrajectoryEnsemble, count: usize, axis: usize) -> Vec<Vec<(f64, f64)>> {
    ens.trajectories
        .iter()
        .take(count)
        .map(|tr| tr.times.iter().zip(&tr.positions).map(|(&t, q)| (t, q[axis])).collect())
        .collect()
}

/// Heat map from trace snapshots, thinned to at most `HEAT_COLUMNS` columns.
pub(super) fn strip_from_trace(trace: &EvolutionTrace, axis: usize) -> CliResult<HeatStrip> {
    let grid = trace.grid();
    let every = trace.snapshots.len().div_ceil(HEAT_COLUMNS).max(1);
    let picked: Vec<&Wavefunction> = trace.snapshots.iter().step_by(every).collect();
    let values = picked
        .iter()
        .map(|f| sllab_core::ensemble::marginal(grid, &f.density(), axis))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HeatStrip { times: picked.iter().map(|f| f.t()).collect(), coords: grid.axis(axis).coords(), values })
}

fn histogram_rows(x: &[f64], binning: &Binning, target: &[f64], axis_rho: &Grid) -> CliResult<Vec<Vec<f64>>> {
    let est = estimate_density(x, binning)?;
    let probs = binning.probabilities(axis_rho.axis(0), target)?;
    let w = binning.width();
    Ok(est
        .edges
        .windows(2)
        .zip(est.density.iter().zip(&probs))
        .map(|(e, (d, p))| vec![0.5 * (e[0] + e[1]), *d, p / w])
        .collect())
}

pub(super) struct EquivarianceSetup {
    psi: Wavefunction,
    cfg: EvolutionConfig,
    params: PhysicalParams,
}

pub(super) fn equivariance_setup(p: &Equivariance) -> CliResult<EquivarianceSetup> {
    let grid = Grid::line(p.length, p.n)?;
    let params = PhysicalParams::quantum(1.0, 1.0)?;
    let psi = Wavefunction::gaussian(&grid, 0.0, p.width, p.k0)?;
    let cfg = EvolutionConfig::new(p.dt, steps_for(p.t, p.dt)?, params, PotentialSpec::Free, p.snapshot_stride);
    cfg.validate(&grid, &[1.0])?;
    steps_for(p.dt * p.snapshot_stride as f64, p.particle_dt)
        .map_err(|_| CliError::Config("params.particle_dt must divide dt * snapshot_stride".into()))?;
    if p.seeds == 0 || p.particles == 0 {
        return Err(CliError::Config("params.seeds and params.particles must be positive".into()));
    }
    Binning::over_axis(grid.axis(0), p.bins)?;
    Ok(EquivarianceSetup { psi, cfg, params })
}

pub(super) fn equivariance(p: &Equivariance, seed: u64, art: &mut Artifacts) -> CliResult<Summary> {
    let EquivarianceSetup { psi, cfg, params } = equivariance_setup(p)?;
    let trace = evolve(&psi, &cfg)?;
    let grid = psi.grid().clone();
    let guidance = Guidance::from_params(&params, 1);
    let rho0 = psi.density();
    let target = trace.last().density();
    let every = ((0.1 / p.particle_dt).round() as usize).max(1);
    let opts = IntegrationOptions { record_stride: every, ..Default::default() };
    let mut s = Summary::new("equivariance", "guiding equation: equivariance", Some(seed));

    let mut reports: Vec<(u64, EquilibriumReport)> = Vec::new();
    let mut node_hits = 0;
    for k in 0..p.seeds {
        let sd = seed.wrapping_add(k);
        let q0 = sample_density(&grid, &rho0, p.particles, sd)?;
        let ens = integrate_bohmian(&trace, &q0, p.particle_dt, &guidance, &opts)?;
        let last = ens.times.len() - 1;
        reports.push((sd, equivariance_test(&ens, &grid, &target, last, p.bins, 0)?));
        node_hits += ens.node_hits();
        if k == 0 {
            art.write("paths.csv", paths_csv(&ens, p.saved_paths).as_bytes())?;
            let svg = trajectory_plot(
                &Figure::new("Bohmian trajectories", "t", "x"),
                &strip_from_trace(&trace, 0)?,
                &paths_along(&ens, p.saved_paths, 0),
            )?;
            art.write("paths.svg", svg.as_bytes())?;
            let binning = Binning::over_axis(grid.axis(0), p.bins)?;
            let rows = histogram_rows(&ens.coordinate_at(last, 0), &binning, &target, &grid)?;
            art.write("histogram.csv", csv("x,empirical,born", rows.clone()).as_bytes())?;
            let svg = line_plot(
                &Figure::new("Ensemble density at the final time", "x", "density"),
                &[
                    Series::new("trajectories", rows.iter().map(|r| (r[0], r[1])).collect()),
                    Series::new("|psi|^2", rows.iter().map(|r| (r[0], r[2])).collect()),
                ],
            )?;
            art.write("histogram.svg", svg.as_bytes())?;
        }
    }
    art.write(
        "pvalues.csv",
        csv(
            "seed,chi2,dof,p_value,pass",
            reports.iter().map(|(sd, r)| vec![*sd as f64, r.chi2, r.dof as f64, r.p_value, r.pass as u8 as f64]),
        )
        .as_bytes(),
    )?;
    let passes = reports.iter().filter(|(_, r)| r.pass).count();
    let needed = (EQUIVARIANCE_PASS_FRACTION * p.seeds as f64).ceil() as usize;
    s.metric("seeds", p.seeds);
    s.metric("passes", passes);
    s.metric("p_values", reports.iter().map(|(_, r)| r.p_value).collect::<Vec<_>>());
    s.metric("node_hits", node_hits);
    s.line(format!("{} trajectories per seed, chi-square at t = {} against |psi_t|^2", p.particles, p.t));
    s.line(format!("{passes} of {} seeds with p > {PASS_P_VALUE}", p.seeds));
    if node_hits > 0 {
        s.warn(format!("{node_hits} velocity evaluations fell back at nodes"));
    }
    s.check("equilibrium preserved", passes >= needed, format!("{passes} of {} passed, need {needed}", p.seeds));
    Ok(s)
}

pub(super) struct NelsonSetup {
    psi: Wavefunction,
    params: PhysicalParams,
    analytic: Vec<f64>,
}

pub(super) fn nelson_setup(p: &NelsonBorn) -> CliResult<NelsonSetup> {
    let grid = Grid::line(p.length, p.n)?;
    let params = PhysicalParams::quantum(1.0, 1.0)?;
    if !(p.omega > 0.0) {
        return Err(CliError::Config("params.omega must be positive".into()));
    }
    let psi = Wavefunction::harmonic_ground_state(&grid, &params, p.omega)?;
    steps_for(p.t, p.dt)?;
    if p.particles == 0 || p.record_stride == 0 {
        return Err(CliError::Config("params.particles and params.record_stride must be positive".into()));
    }
    Binning::over_axis(grid.axis(0), p.bins)?;
    // m omega / (pi hbar) normalisation of the oscillator ground-state density
    let a = params.mass * p.omega / params.hbar;
    let analytic = grid.axis(0).coords().iter().map(|x| (a / std::f64::consts::PI).sqrt() * (-a * x * x).exp()).collect();
    Ok(NelsonSetup { psi, params, analytic })
}

pub(super) fn nelson_born(p: &NelsonBorn, seed: u64, art: &mut Artifacts) -> CliResult<Summary> {
    let NelsonSetup { psi, params, analytic } = nelson_setup(p)?;
    let grid = psi.grid().clone();
    let trace = EvolutionTrace::frozen(&psi, p.t, params)?;
    let guidance = Guidance::from_params(&params, 1);
    let q0 = match p.start_x {
        Some(x) => vec![[x, 0.0]; p.particles],
        None => sample_density(&grid, &psi.density(), p.particles, seed)?,
    };
    let cfg = SdeConfig { record_stride: p.record_stride, ..SdeConfig::new(p.dt, seed) };
    let nelson = integrate_nelson(&trace, &q0, &cfg, &guidance)?;
    let control_cfg = SdeConfig { drift: DriftMode::Zero, ..cfg.clone() };
    let control = integrate_nelson(&trace, &q0, &control_cfg, &guidance)?;
    let last = nelson.times.len() - 1;
    let xn = nelson.coordinate_at(last, 0);
    let xc = control.coordinate_at(last, 0);
    let rn = equilibrium_test(&xn, grid.axis(0), &analytic, p.bins)?;
    let rc = equilibrium_test(&xc, grid.axis(0), &analytic, p.bins)?;

    let binning = Binning::over_axis(grid.axis(0), p.bins)?;
    let hn = histogram_rows(&xn, &binning, &analytic, &grid)?;
    let hc = estimate_density(&xc, &binning)?;
    let rows: Vec<Vec<f64>> = hn.iter().zip(&hc.density).map(|(r, c)| vec![r[0], r[1], *c, r[2]]).collect();
    art.write("histogram.csv", csv("x,nelson,brownian,analytic", rows.clone()).as_bytes())?;
    let svg = line_plot(
        &Figure::new("Stationary density", "x", "density"),
        &[
            Series::new("Nelson", rows.iter().map(|r| (r[0], r[1])).collect()),
            Series::new("Brownian control", rows.iter().map(|r| (r[0], r[2])).collect()),
            Series::new("|psi_0|^2", rows.iter().map(|r| (r[0], r[3])).collect()),
        ],
    )?;
    art.write("histogram.svg", svg.as_bytes())?;
    art.write_json("tests.json", &serde_json::json!({ "nelson": rn, "brownian_control": rc }))?;
    art.write("paths.csv", paths_csv(&nelson, p.saved_paths).as_bytes())?;
    let strip = HeatStrip {
        times: nelson.times.iter().step_by(nelson.times.len().div_ceil(HEAT_COLUMNS).max(1)).copied().collect(),
        coords: grid.axis(0).coords(),
        values: Vec::new(),
    };
    let strip = HeatStrip { values: vec![analytic.clone(); strip.times.len()], ..strip };
    let svg = trajectory_plot(&Figure::new("Nelson paths", "t", "x"), &strip, &paths_along(&nelson, p.saved_paths, 0))?;
    art.write("paths.svg", svg.as_bytes())?;

    let mut s = Summary::new("nelson_born", "stochastic mechanics: Born rule from diffusion", Some(seed));
    s.metric("nelson", &rn);
    s.metric("brownian_control", &rc);
    s.metric("node_hits", nelson.node_hits());
    s.line(format!("{} paths to t = {}, dt = {}", p.particles, p.t, p.dt));
    s.line(format!("Nelson: chi2 = {:.2} (dof {}), p = {:.4}", rn.chi2, rn.dof, rn.p_value));
    s.line(format!("Brownian control: chi2 = {:.2} (dof {}), p = {:.3e}", rc.chi2, rc.dof, rc.p_value));
    if nelson.node_hits() > 0 {
        s.warn(format!("{} drift evaluations fell back at nodes", nelson.node_hits()));
    }
    s.check("Nelson ensemble matches |psi|^2", rn.p_value > PASS_P_VALUE, format!("p = {:.4}", rn.p_value));
    s.check(
        "driftless control rejected",
        rc.p_value < CONTROL_P_VALUE,
        format!("p = {:.3e} (must be below {CONTROL_P_VALUE:e})", rc.p_value),
    );
    Ok(s)
}

pub(super) fn relaxation_setup(p: &Relaxation) -> CliResult<(Wavefunction, EvolutionConfig)> {
    let grid = Grid::line(p.length, p.n)?;
    let params = PhysicalParams::quantum(1.0, 1.0)?;
    if !(p.omega > 0.0) {
        return Err(CliError::Config("params.omega must be positive".into()));
    }
    // equal superposition of the two lowest oscillator states
    let a = params.mass * p.omega / params.hbar;
    let psi = Wavefunction::from_fn(&grid, |q| {
        C64::new((1.0 + (2.0 * a).sqrt() * q[0]) * (-a * q[0] * q[0] / 2.0).exp(), 0.0)
    })
    .normalized()?;
    let cfg = EvolutionConfig::new(
        p.dt,
        steps_for(p.t, p.dt)?,
        params,
        PotentialSpec::Harmonic { omega: p.omega },
        p.snapshot_stride,
    );
    cfg.validate(&grid, &[1.0])?;
    steps_for(p.dt * p.snapshot_stride as f64, p.particle_dt)
        .map_err(|_| CliError::Config("params.particle_dt must divide dt * snapshot_stride".into()))?;
    if p.particles == 0 || p.record_stride == 0 {
        return Err(CliError::Config("params.particles and params.record_stride must be positive".into()));
    }
    Binning::coarse(grid.axis(0), p.coarse_bins)?;
    Ok((psi, cfg))
}

pub(super) fn relaxation(p: &Relaxation, seed: u64, art: &mut Artifacts) -> CliResult<Summary> {
    let (psi, cfg) = relaxation_setup(p)?;
    let trace = evolve(&psi, &cfg)?;
    let grid = psi.grid().clone();
    let guidance = Guidance::from_params(&cfg.params, 1);
    let uniform = vec![1.0 / p.length; p.n];
    let q0 = sample_density(&grid, &uniform, p.particles, seed)?;
    let ens = match p.kind {
        TrajectoryKind::Bohmian => {
            let opts = IntegrationOptions { record_stride: p.record_stride, ..Default::default() };
            integrate_bohmian(&trace, &q0, p.particle_dt, &guidance, &opts)?
        }
        TrajectoryKind::Nelson => {
            let sde = SdeConfig { record_stride: p.record_stride, ..SdeConfig::new(p.particle_dt, seed) };
            integrate_nelson(&trace, &q0, &sde, &guidance)?
        }
    };
    let h = relaxation_h_function(&ens, &trace, p.coarse_bins)?;
    art.write("h.csv", csv("t,H", h.iter().map(|&(t, v)| vec![t, v])).as_bytes())?;
    let svg = line_plot(
        &Figure::new("Coarse-grained H", "t", "H").style(Style::LinesAndMarkers),
        &[Series::new(format!("{:?}", p.kind).to_lowercase(), h.clone())],
    )?;
    art.write("h.svg", svg.as_bytes())?;
    art.write("paths.csv", paths_csv(&ens, 40).as_bytes())?;
    let svg = trajectory_plot(&Figure::new("Relaxing trajectories", "t", "x"), &strip_from_trace(&trace, 0)?, &paths_along(&ens, 40, 0))?;
    art.write("paths.svg", svg.as_bytes())?;

    let (first, last) = (h[0].1, h[h.len() - 1].1);
    let mut s = Summary::new("relaxation", "quantum equilibrium: relaxation", Some(seed));
    s.metric("h_initial", first);
    s.metric("h_final", last);
    s.metric("h_min", h.iter().map(|x| x.1).fold(f64::INFINITY, f64::min));
    s.metric("node_hits", ens.node_hits());
    s.line(format!("{:?} ensemble of {} from a uniform start", p.kind, p.particles));
    s.line(format!("H: {first:.5} -> {last:.5}"));
    if ens.node_hits() > 0 {
        s.warn(format!("{} field evaluations fell back at nodes", ens.node_hits()));
    }
    s.check("H decreases", last < first, format!("{first:.5} -> {last:.5}"));
    Ok(s)
}
