use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::grid_field::{Grid, PhysicalParams, PotentialSpec, Spectral, Wavefunction};

/// Imaginary-time split-step relaxation towards the ground state of
/// `-(hbar^2/2m) lap + V`. Only meant for building eigenstate fixtures.
pub fn relax_ground_state(
    grid: &Grid,
    potential: &PotentialSpec,
    params: &PhysicalParams,
    dtau: f64,
    steps: usize,
) -> Result<Wavefunction> {
    let v = potential.evaluate(grid, params.mass)?;
    let spectral = Spectral::new(grid);
    let half_v: Vec<f64> = v.iter().map(|v| (-0.5 * v * dtau / params.hbar).exp()).collect();
    let kin: Vec<f64> = spectral
        .k_squared()
        .iter()
        .map(|k2| (-params.hbar * k2 * dtau / (2.0 * params.mass)).exp())
        .collect();
    let mut psi = Wavefunction::from_fn(grid, |p| C64::new((-0.25 * (p[0] * p[0] + p[1] * p[1])).exp(), 0.0)).normalized()?;
    for _ in 0..steps {
        let vals = psi.values_mut();
        vals.iter_mut().zip(&half_v).for_each(|(z, h)| *z *= h);
        spectral.forward(vals);
        vals.iter_mut().zip(&kin).for_each(|(z, k)| *z *= k);
        spectral.inverse(vals);
        vals.iter_mut().zip(&half_v).for_each(|(z, h)| *z *= h);
        psi.normalize()?;
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::energy_expectation;

    #[test]
    fn relaxes_to_harmonic_ground_state() {
        let g = Grid::line(20.0, 256).unwrap();
        let p = PhysicalParams::default();
        let pot = PotentialSpec::Harmonic { omega: 1.0 };
        let psi = relax_ground_state(&g, &pot, &p, 1e-3, 20_000).unwrap();
        let e = energy_expectation(&psi, &pot, &p).unwrap();
        assert!((e - 0.5).abs() < 1e-6, "{e}");
        let exact = Wavefunction::harmonic_ground_state(&g, &p, 1.0).unwrap();
        assert!(psi.inner(&exact).norm() > 1.0 - 1e-6);
    }
}
