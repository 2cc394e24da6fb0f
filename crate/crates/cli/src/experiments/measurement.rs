use sllab_core::ensemble::marginal;
use sllab_core::measurement::{OutcomeReport, MAX_BRANCH_OVERLAP};
use sllab_core::trajectories::TrajectoryKind;

use super::ensembles::strip_from_trace;
use super::{csv, Summary};
use crate::config::Measurement;
use crate::error::{CliError, CliResult};
use crate::output::Artifacts;
use crate::plot::{line_plot, trajectory_plot, Figure, Series};

/// Total norm of the 2D field must stay within this of one.
pub const NORM_TOL: f64 = 1e-6;

pub(super) fn setup(p: &Measurement) -> CliResult<()> {
    p.model.validate()?;
    if p.particles == 0 || p.kinds.is_empty() {
        return Err(CliError::Config("params.particles and params.kinds must be nonempty".into()));
    }
    Ok(())
}

fn kind_name(k: TrajectoryKind) -> &'static str {
    match k {
        TrajectoryKind::Bohmian => "bohmian",
        TrajectoryKind::Nelson => "nelson",
    }
}

pub(super) fn run(p: &Measurement, seed: u64, art: &mut Artifacts) -> CliResult<Summary> {
    setup(p)?;
    let prepared = p.model.prepare()?;
    let trace = prepared.trace();
    let grid = trace.grid().clone();
    let mut s = Summary::new("measurement", "measurement without collapse: pointer statistics", Some(seed));

    let y = grid.axis(1).coords();
    let picks = [0, trace.snapshots.len() / 2, trace.snapshots.len() - 1];
    let curves = picks
        .iter()
        .map(|&k| {
            let f = &trace.snapshots[k];
            Ok(Series::from_xy(format!("t = {:.3}", f.t()), &y, &marginal(&grid, &f.density(), 1)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    art.write("pointer.svg", line_plot(&Figure::new("Pointer marginal", "y", "density"), &curves)?.as_bytes())?;
    let final_y = marginal(&grid, &trace.last().density(), 1)?;
    art.write("pointer.csv", csv("y,rho_final", y.iter().zip(&final_y).map(|(a, b)| vec![*a, *b])).as_bytes())?;

    let mut counts = String::from("kind,branch,probability,count,frequency,sigma,lower,upper\n");
    let mut reports: Vec<OutcomeReport> = Vec::new();
    for &kind in &p.kinds {
        let (r, ens) = prepared.sample(kind, p.particles, seed)?;
        let name = kind_name(kind);
        for b in 0..r.counts.len() {
            counts.push_str(&format!(
                "{name},{b},{},{},{},{},{},{}\n",
                r.branch_probabilities[b], r.counts[b], r.frequencies[b], r.sigma[b], r.intervals[b].0, r.intervals[b].1
            ));
        }
        let mut paths = String::from("traj_id,t,x,y\n");
        for (id, tr) in ens.trajectories.iter().take(p.saved_paths).enumerate() {
            for (t, q) in tr.times.iter().zip(&tr.positions) {
                paths.push_str(&format!("{id},{t},{},{}\n", q[0], q[1]));
            }
        }
        art.write(&format!("paths_{name}.csv"), paths.as_bytes())?;
        let lines: Vec<Vec<(f64, f64)>> = ens
            .trajectories
            .iter()
            .take(p.saved_paths)
            .map(|tr| tr.times.iter().zip(&tr.positions).map(|(&t, q)| (t, q[1])).collect())
            .collect();
        let svg = trajectory_plot(&Figure::new(&format!("Pointer coordinate, {name}"), "t", "y"), &strip_from_trace(trace, 1)?, &lines)?;
        art.write(&format!("paths_{name}.svg"), svg.as_bytes())?;
        art.write_json(&format!("outcomes_{name}.json"), &r)?;
        reports.push(r);
    }
    art.write("counts.csv", counts.as_bytes())?;

    let first = &reports[0];
    s.metric("overlap", first.overlap);
    s.metric("norm_drift", first.norm_drift);
    s.metric("branch_norm_drift", first.branch_norm_drift);
    s.metric("branch_centers", &first.branch_centers);
    s.line(format!(
        "branch probabilities {:?}, pointer centres {:?}",
        p.model.branch_probabilities,
        first.branch_centers.iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>()
    ));
    s.line(format!("overlap {:.2e}, norm drift {:.2e}", first.overlap, first.norm_drift));
    for r in &reports {
        let name = kind_name(r.kind);
        s.metric(&format!("{name}_frequencies"), &r.frequencies);
        s.metric(&format!("{name}_counts"), &r.counts);
        s.line(format!(
            "{name}: counts {:?}, ambiguous {}, frequency of branch 0 = {:.4} (sigma {:.4})",
            r.counts, r.ambiguous, r.frequencies[0], r.sigma[0]
        ));
        s.check(
            &format!("{name} frequencies within 3 sigma"),
            r.within_3_sigma.iter().all(|b| *b),
            format!("{:?} vs {:?}", r.frequencies, r.branch_probabilities),
        );
        if r.node_hits > 0 {
            s.warn(format!("{name}: {} field evaluations fell back at nodes", r.node_hits));
        }
        if r.ambiguous > 0 {
            s.warn(format!("{name}: {} particles between pointer regions", r.ambiguous));
        }
    }
    s.check(
        "branches separated",
        first.overlap < MAX_BRANCH_OVERLAP,
        format!("overlap {:.3e} (limit {MAX_BRANCH_OVERLAP})", first.overlap),
    );
    s.check("norm conserved", first.norm_drift < NORM_TOL, format!("drift {:.3e} (tolerance {NORM_TOL:e})", first.norm_drift));
    Ok(s)
}
