//! Independent Crank-Nicolson reference for the split-step propagator.

#[path = "support/crank_nicolson.rs"]
mod oracle;

use oracle::crank_nicolson;
use sllab_core::dynamics::{evolve, EvolutionConfig};
use sllab_core::grid_field::{Grid, PhysicalParams, PotentialSpec, Wavefunction};

#[test]
fn split_step_matches_crank_nicolson() {
    let (length, n, dt, steps) = (16.0, 128, 2e-3, 100);
    let g = Grid::line(length, n).unwrap();
    let psi = Wavefunction::gaussian(&g, 1.5, 0.8, 0.7).unwrap();
    let pot = PotentialSpec::Harmonic { omega: 1.0 };
    let p = PhysicalParams::quantum(1.0, 1.0).unwrap();
    let tr = evolve(&psi, &EvolutionConfig::new(dt, steps, p, pot.clone(), steps)).unwrap();

    let v = pot.evaluate(&g, 1.0).unwrap();
    let re: Vec<f64> = psi.values().iter().map(|z| z.re).collect();
    let im: Vec<f64> = psi.values().iter().map(|z| z.im).collect();
    let reference = crank_nicolson(&re, &im, &v, length, dt, steps);

    let err = tr.last().values().iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("max pointwise split-step vs Crank-Nicolson difference: {err:e}");
    assert!(err < 1e-5, "{err}");
}
