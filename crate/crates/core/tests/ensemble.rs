use proptest::prelude::*;
use sllab_core::dynamics::{evolve, EvolutionConfig, EvolutionTrace};
use sllab_core::ensemble::{
    chi_square, equilibrium_test, equivariance_test, estimate_density, relaxation_h_function, sample_density,
    Binning,
};
use sllab_core::grid_field::{Grid, PhysicalParams, PotentialSpec, Wavefunction};
use sllab_core::trajectories::{integrate_bohmian, integrate_nelson, Guidance, IntegrationOptions, SdeConfig};
use sllab_core::C64;

fn unit() -> PhysicalParams {
    PhysicalParams::quantum(1.0, 1.0).unwrap()
}

fn xs(points: &[[f64; 2]]) -> Vec<f64> {
    points.iter().map(|p| p[0]).collect()
}

fn gaussian_rho(g: &Grid, s: f64) -> Vec<f64> {
    Wavefunction::gaussian(g, 0.0, s, 0.0).unwrap().density()
}

#[test]
fn uniform_sample_mean() {
    let l = 10.0;
    let g = Grid::line(l, 64).unwrap();
    let rho = vec![1.0 / l; 64];
    let n = 20_000;
    let x = xs(&sample_density(&g, &rho, n, 3).unwrap());
    let mean = x.iter().sum::<f64>() / n as f64;
    assert!(mean.abs() < 4.0 * (l / 12f64.sqrt()) / (n as f64).sqrt(), "{mean}");
    assert!(x.iter().all(|v| (-5.0..5.0).contains(v)));
}

#[test]
fn gaussian_sample_variance() {
    let g = Grid::line(20.0, 512).unwrap();
    let x = xs(&sample_density(&g, &gaussian_rho(&g, 1.0), 100_000, 5).unwrap());
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((0.98..=1.02).contains(&var), "{var}");
}

#[test]
fn sampler_edge_cases() {
    let g = Grid::line(10.0, 64).unwrap();
    let mut rho = vec![0.1; 64];
    assert!(sample_density(&g, &rho, 0, 1).unwrap().is_empty());
    rho[3] = -1e-6;
    assert!(sample_density(&g, &rho, 10, 1).is_err());
    rho[3] = -1e-13;
    rho[4] += 0.1;
    assert!(sample_density(&g, &rho, 10, 1).is_ok());
    assert!(sample_density(&g, &vec![1.0; 64], 10, 1).is_err());
    // identical seeds, identical draws
    assert_eq!(sample_density(&g, &gaussian_rho(&g, 1.0), 50, 9).unwrap(), sample_density(&g, &gaussian_rho(&g, 1.0), 50, 9).unwrap());
}

#[test]
fn sampler_on_a_plane() {
    let g = Grid::plane([10.0, 6.0], [64, 32]).unwrap();
    let psi = Wavefunction::from_fn(&g, |p| C64::new((-(p[0] - 1.0).powi(2) / 4.0 - p[1] * p[1]).exp(), 0.0))
        .normalized()
        .unwrap();
    let pts = sample_density(&g, &psi.density(), 20_000, 2).unwrap();
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
    let vy = pts.iter().map(|p| p[1] * p[1]).sum::<f64>() / pts.len() as f64;
    assert!((mx - 1.0).abs() < 0.05);
    // rho ~ exp(-2 y^2)
    assert!((vy - 0.25).abs() < 0.02, "{vy}");
}

#[test]
fn histogram_basics() {
    let b = Binning::new(-1.0, 1.0, 10).unwrap();
    let est = estimate_density(&[0.05], &b).unwrap();
    assert_eq!(est.counts.iter().filter(|&&c| c > 0).count(), 1);
    assert_eq!(est.counts[5], 1);
    assert!((est.density[5] - 5.0).abs() < 1e-12);
    assert!(estimate_density(&[], &b).is_err());
    assert!(estimate_density(&[3.0], &b).is_err());

    let g = Grid::line(2.0, 16).unwrap();
    let x = xs(&sample_density(&g, &vec![0.5; 16], 5000, 8).unwrap());
    let est = estimate_density(&x, &b).unwrap();
    assert_eq!(est.counts.iter().sum::<u64>(), 5000);
    assert!((est.density.iter().sum::<f64>() * 0.2 - 1.0).abs() < 1e-12);
    let (_, dof, p) = chi_square(&est.counts, &[0.1; 10]).unwrap();
    assert_eq!(dof, 9);
    assert!(p > 1e-3);
}

#[test]
fn sampler_passes_its_own_chi_square() {
    let g = Grid::line(20.0, 256).unwrap();
    let rho = gaussian_rho(&g, 1.3);
    let passes = (0..20)
        .filter(|&seed| {
            let x = xs(&sample_density(&g, &rho, 10_000, seed).unwrap());
            equilibrium_test(&x, g.axis(0), &rho, 50).unwrap().pass
        })
        .count();
    assert!(passes >= 18, "{passes} of 20");
}

#[test]
fn bohmian_ensemble_stays_in_equilibrium() {
    let g = Grid::line(40.0, 512).unwrap();
    let psi = Wavefunction::gaussian(&g, 0.0, 1.0, 0.0).unwrap();
    let cfg = EvolutionConfig::new(1e-3, 2000, unit(), PotentialSpec::Free, 100);
    let trace = evolve(&psi, &cfg).unwrap();
    let q0 = sample_density(&g, &psi.density(), 10_000, 17).unwrap();
    let opts = IntegrationOptions { record_stride: 100, ..Default::default() };
    let ens = integrate_bohmian(&trace, &q0, 1e-2, &Guidance::from_params(&unit(), 1), &opts).unwrap();
    let last = ens.times.len() - 1;
    assert!((ens.times[last] - 2.0).abs() < 1e-12);
    let target = trace.last().density();
    let report = equivariance_test(&ens, &g, &target, last, 50, 0).unwrap();
    assert!(report.pass, "{report:?}");
    assert!((0.0..=1.0).contains(&report.p_value));

    // power: a target twice as wide is rejected
    let s_t = 2f64.sqrt();
    let wrong = gaussian_rho(&g, 2.0 * s_t);
    let report = equivariance_test(&ens, &g, &wrong, last, 50, 0).unwrap();
    assert!(report.p_value < 1e-6);

    let small = integrate_bohmian(&trace, &q0[..999], 1e-2, &Guidance::from_params(&unit(), 1), &opts).unwrap();
    assert!(equivariance_test(&small, &g, &target, 0, 50, 0).is_err());
}

#[test]
fn equilibrium_start_has_small_h() {
    let g = Grid::line(20.0, 256).unwrap();
    let psi = Wavefunction::harmonic_ground_state(&g, &unit(), 1.0).unwrap();
    let trace = EvolutionTrace::frozen(&psi, 2.0, unit()).unwrap();
    let q0 = sample_density(&g, &psi.density(), 10_000, 4).unwrap();
    let cfg = SdeConfig { record_stride: 50, ..SdeConfig::new(1e-2, 4) };
    let ens = integrate_nelson(&trace, &q0, &cfg, &Guidance::from_params(&unit(), 1)).unwrap();
    let h = relaxation_h_function(&ens, &trace, 20).unwrap();
    assert_eq!(h.len(), ens.times.len());
    for (_, v) in &h {
        assert!((-1e-9..0.02).contains(v), "{v}");
    }
    for (_, v) in relaxation_h_function(&ens, &trace, 1).unwrap() {
        assert!(v.abs() < 1e-12);
    }
}

#[test]
fn nelson_relaxes_a_uniform_start() {
    // superposition of the two lowest oscillator states, uniform initial positions
    let g = Grid::line(12.0, 128).unwrap();
    let x = g.axis(0).coords();
    let psi = Wavefunction::from_fn(&g, |p| C64::new((1.0 + 2f64.sqrt() * p[0]) * (-p[0] * p[0] / 2.0).exp(), 0.0))
        .normalized()
        .unwrap();
    let cfg = EvolutionConfig::new(2e-3, 2500, unit(), PotentialSpec::Harmonic { omega: 1.0 }, 25);
    let trace = evolve(&psi, &cfg).unwrap();
    let uniform = vec![1.0 / 12.0; x.len()];
    let q0 = sample_density(&g, &uniform, 2000, 12).unwrap();
    let sde = SdeConfig { record_stride: 50, ..SdeConfig::new(1e-2, 12) };
    let ens = integrate_nelson(&trace, &q0, &sde, &Guidance::from_params(&unit(), 1)).unwrap();
    let h = relaxation_h_function(&ens, &trace, 20).unwrap();
    let (first, last) = (h[0].1, h[h.len() - 1].1);
    assert!(last < first, "{first} -> {last}");
    assert!(h.iter().all(|(_, v)| *v >= -1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn p_value_is_a_probability(counts in prop::collection::vec(0u64..400, 12)) {
        prop_assume!(counts.iter().sum::<u64>() >= 100);
        let probs = vec![1.0 / 12.0; 12];
        let (chi2, _, p) = chi_square(&counts, &probs).unwrap();
        prop_assert!(chi2 >= 0.0);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn histogram_counts_every_sample(seed in any::<u64>(), n in 1usize..500) {
        let g = Grid::line(8.0, 64).unwrap();
        let x = xs(&sample_density(&g, &gaussian_rho(&g, 1.0), n, seed).unwrap());
        let est = estimate_density(&x, &Binning::over_axis(g.axis(0), 16).unwrap()).unwrap();
        prop_assert_eq!(est.counts.iter().sum::<u64>() as usize, n);
        prop_assert!((est.density.iter().sum::<f64>() * 0.5 - 1.0).abs() < 1e-12);
    }
}
