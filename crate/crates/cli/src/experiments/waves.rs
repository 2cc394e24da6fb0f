use sllab_core::dynamics::{evolve, lambda_sweep as sweep, EvolutionConfig, EvolutionTrace, SweepStatus};
use sllab_core::grid_field::{Grid, PhysicalParams, PotentialSpec, Wavefunction};

use super::{csv, steps_for, Summary};
use crate::config::{EigenstateHold, FreePacket, LambdaSweep};
use crate::error::CliResult;
use crate::output::Artifacts;
use crate::plot::{line_plot, Figure, Series, Style};

/// Relative width error allowed for free dispersion.
pub const WIDTH_TOL: f64 = 1e-3;
pub const EIGEN_DENSITY_TOL: f64 = 1e-6;
pub const EIGEN_ENERGY_TOL: f64 = 1e-7;

fn width(psi: &Wavefunction) -> f64 {
    psi.moments(0).1.sqrt()
}

fn write_trace(art: &mut Artifacts, trace: &EvolutionTrace) -> CliResult<()> {
    art.write_with("diagnostics.csv", |w| trace.write_diagnostics_csv(w))?;
    art.write_with("snapshots.slf1", |w| trace.write_slf1(w))
}

fn density_plot(art: &mut Artifacts, name: &str, title: &str, x: &[f64], curves: &[(&str, Vec<f64>)]) -> CliResult<()> {
    let series: Vec<Series> = curves.iter().map(|(l, y)| Series::from_xy(*l, x, y)).collect();
    let svg = line_plot(&Figure::new(title, "x", "density"), &series)?;
    art.write(name, svg.as_bytes())
}

pub(super) struct Setup {
    psi: Wavefunction,
    cfg: EvolutionConfig,
}

pub(super) fn free_packet_setup(p: &FreePacket) -> CliResult<Setup> {
    let grid = Grid::line(p.length, p.n)?;
    let params = PhysicalParams::quantum(p.mass, p.hbar)?.with_lambda(p.lambda)?;
    let psi = Wavefunction::gaussian(&grid, p.center, p.width, p.k0)?;
    let cfg = EvolutionConfig::new(p.dt, steps_for(p.t, p.dt)?, params, PotentialSpec::Free, p.snapshot_stride);
    cfg.validate(&grid, &[p.mass])?;
    Ok(Setup { psi, cfg })
}

/// Density width of a free Gaussian. The `lambda` equation acts on `(R, S)`
/// like the linear one with `hbar' = sqrt(lambda) hbar`.
fn analytic_width(p: &FreePacket, t: f64) -> f64 {
    let hbar_eff = p.lambda.sqrt() * p.hbar;
    p.width * (1.0 + (hbar_eff * t / (2.0 * p.mass * p.width * p.width)).powi(2)).sqrt()
}

pub(super) fn free_packet(p: &FreePacket, art: &mut Artifacts) -> CliResult<Summary> {
    let Setup { psi, cfg } = free_packet_setup(p)?;
    let trace = evolve(&psi, &cfg)?;
    let mut s = Summary::new("free_packet", "wave dynamics: free dispersion", None);
    let rows: Vec<Vec<f64>> = trace
        .snapshots
        .iter()
        .map(|f| {
            let (w, a) = (width(f), analytic_width(p, f.t()));
            vec![f.t(), w, a, (w - a) / a]
        })
        .collect();
    let last = rows.last().expect("trace has snapshots").clone();
    art.write("width.csv", csv("t,width,analytic,rel_error", rows.clone()).as_bytes())?;
    let x = psi.grid().axis(0).coords();
    let (rho0, rho1) = (psi.density(), trace.last().density());
    art.write(
        "density.csv",
        csv("x,rho_initial,rho_final", (0..x.len()).map(|i| vec![x[i], rho0[i], rho1[i]])).as_bytes(),
    )?;
    write_trace(art, &trace)?;
    let svg = line_plot(
        &Figure::new("Packet width", "t", "width"),
        &[
            Series::new("simulated", rows.iter().map(|r| (r[0], r[1])).collect()),
            Series::new("analytic", rows.iter().map(|r| (r[0], r[2])).collect()),
        ],
    )?;
    art.write("width.svg", svg.as_bytes())?;
    density_plot(art, "density.svg", "Density", &x, &[("t = 0", rho0), ("final", rho1)])?;

    let norm_drift = trace.diagnostics.iter().map(|d| (d.norm - 1.0).abs()).fold(0.0, f64::max);
    s.metric("t_final", last[0]);
    s.metric("width", last[1]);
    s.metric("width_analytic", last[2]);
    s.metric("width_rel_error", last[3]);
    s.metric("norm_drift", norm_drift);
    s.line(format!("width at t = {}: {:.6} (analytic {:.6})", last[0], last[1], last[2]));
    if let Some(reason) = &trace.truncated {
        s.warn(format!("trace truncated: {reason}"));
    }
    s.check(
        "width matches analytic",
        trace.truncated.is_none() && last[3].abs() < WIDTH_TOL,
        format!("relative error {:.3e} (tolerance {WIDTH_TOL:e})", last[3]),
    );
    Ok(s)
}

pub(super) fn eigenstate_setup(p: &EigenstateHold) -> CliResult<Setup> {
    let grid = Grid::line(p.length, p.n)?;
    let params = PhysicalParams::quantum(p.mass, p.hbar)?;
    let psi = Wavefunction::harmonic_ground_state(&grid, &params, p.omega)?;
    let cfg = EvolutionConfig::new(p.dt, p.steps, params, PotentialSpec::Harmonic { omega: p.omega }, p.snapshot_stride);
    cfg.validate(&grid, &[p.mass])?;
    Ok(Setup { psi, cfg })
}

pub(super) fn eigenstate_hold(p: &EigenstateHold, art: &mut Artifacts) -> CliResult<Summary> {
    let Setup { psi, cfg } = eigenstate_setup(p)?;
    let trace = evolve(&psi, &cfg)?;
    let mut s = Summary::new("eigenstate_hold", "wave dynamics: stationary states", None);
    let rho0 = psi.density();
    let e0 = trace.diagnostics[0].energy;
    let rows: Vec<Vec<f64>> = trace
        .snapshots
        .iter()
        .zip(&trace.diagnostics)
        .map(|(f, d)| {
            let drift = f.density().iter().zip(&rho0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            vec![f.t(), drift, (d.energy - e0).abs()]
        })
        .collect();
    let density_drift = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let energy_drift = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    art.write("drift.csv", csv("t,density_drift,energy_drift", rows.clone()).as_bytes())?;
    write_trace(art, &trace)?;
    let x = psi.grid().axis(0).coords();
    density_plot(art, "density.svg", "Ground-state density", &x, &[("t = 0", rho0), ("final", trace.last().density())])?;
    let svg = line_plot(
        &Figure::new("Drift from the initial state", "t", "max drift").style(Style::LinesAndMarkers),
        &[
            Series::new("density", rows.iter().map(|r| (r[0], r[1])).collect()),
            Series::new("energy", rows.iter().map(|r| (r[0], r[2])).collect()),
        ],
    )?;
    art.write("drift.svg", svg.as_bytes())?;
    s.metric("energy", e0);
    s.metric("density_drift", density_drift);
    s.metric("energy_drift", energy_drift);
    s.line(format!("E = {e0:.9}, {} steps", p.steps));
    s.check(
        "density stationary",
        density_drift < EIGEN_DENSITY_TOL,
        format!("max pointwise drift {density_drift:.3e} (tolerance {EIGEN_DENSITY_TOL:e})"),
    );
    s.check(
        "energy conserved",
        energy_drift < EIGEN_ENERGY_TOL,
        format!("max drift {energy_drift:.3e} (tolerance {EIGEN_ENERGY_TOL:e})"),
    );
    Ok(s)
}

pub(super) fn sweep_setup(p: &LambdaSweep) -> CliResult<(Vec<Wavefunction>, EvolutionConfig)> {
    let grid = Grid::line(p.length, p.n)?;
    let params = PhysicalParams::quantum(p.mass, p.hbar)?;
    let parts = p
        .centers
        .iter()
        .map(|&c| Wavefunction::gaussian(&grid, c, p.width, 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    if parts.is_empty() {
        return Err(crate::error::CliError::Config("params.centers: need at least one packet".into()));
    }
    if p.lambdas.is_empty() {
        return Err(crate::error::CliError::Config("params.lambdas: need at least one value".into()));
    }
    let cfg = EvolutionConfig::new(p.dt, steps_for(p.t, p.dt)?, params, PotentialSpec::Free, p.snapshot_stride);
    cfg.validate(&grid, &[p.mass])?;
    Ok((parts, cfg))
}

pub(super) fn lambda_sweep(p: &LambdaSweep, art: &mut Artifacts) -> CliResult<Summary> {
    let (parts, cfg) = sweep_setup(p)?;
    let entries = sweep(&parts, &cfg, &p.lambdas)?;
    let mut s = Summary::new("lambda_sweep", "quantum potential strength: classical to quantum continuum", None);
    let status = |e: &sllab_core::dynamics::SweepEntry| match &e.status {
        SweepStatus::Ok => "ok".to_string(),
        SweepStatus::Truncated(r) => format!("truncated: {r}"),
        SweepStatus::Failed(r) => format!("failed: {r}"),
    };
    let mut text = String::from("lambda,visibility,max_Q,status\n");
    for e in &entries {
        let v = e.visibility.map(|v| v.to_string()).unwrap_or_default();
        text.push_str(&format!("{},{},{},\"{}\"\n", e.lambda, v, e.max_q, status(e).replace('"', "'")));
    }
    art.write("sweep.csv", text.as_bytes())?;
    art.write_json("sweep.json", &entries)?;
    let points: Vec<(f64, f64)> = entries.iter().filter_map(|e| e.visibility.map(|v| (e.lambda, v))).collect();
    if !points.is_empty() {
        let svg = line_plot(
            &Figure::new("Interference visibility", "lambda", "visibility").style(Style::LinesAndMarkers),
            &[Series::new("visibility", points.clone())],
        )?;
        art.write("visibility.svg", svg.as_bytes())?;
    }
    let x = parts[0].grid().axis(0).coords();
    let curves: Vec<Series> = entries
        .iter()
        .filter(|e| !e.final_density.is_empty())
        .map(|e| Series::from_xy(format!("lambda = {}", e.lambda), &x, &e.final_density))
        .collect();
    if !curves.is_empty() {
        let svg = line_plot(&Figure::new("Final density", "x", "density"), &curves)?;
        art.write("densities.svg", svg.as_bytes())?;
    }
    let q: Vec<Series> = entries
        .iter()
        .filter(|e| !e.max_q_history.is_empty())
        .map(|e| Series::new(format!("lambda = {}", e.lambda), e.max_q_history.clone()))
        .collect();
    if !q.is_empty() {
        art.write("max_q.svg", line_plot(&Figure::new("Largest |Q|", "t", "max |Q|"), &q)?.as_bytes())?;
    }

    for e in &entries {
        s.line(format!(
            "lambda = {:<5} visibility = {}  max|Q| = {:.4}  {}",
            e.lambda,
            e.visibility.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into()),
            e.max_q,
            status(e)
        ));
        if e.status != SweepStatus::Ok {
            s.warn(format!("lambda = {}: {}", e.lambda, status(e)));
        }
    }
    s.metric("visibility", &points);
    let complete = points.len() == entries.len() && parts.len() > 1;
    let monotone = points.windows(2).all(|w| w[1].1 >= w[0].1);
    let strict = points.len() >= 2 && points[points.len() - 1].1 > points[0].1;
    s.check(
        "visibility non-decreasing in lambda",
        complete && monotone,
        format!("{} of {} values available", points.len(), entries.len()),
    );
    s.check(
        "visibility rises between endpoints",
        complete && strict,
        match (points.first(), points.last()) {
            (Some(a), Some(b)) => format!("{:.4} -> {:.4}", a.1, b.1),
            _ => "no values".into(),
        },
    );
    Ok(s)
}
