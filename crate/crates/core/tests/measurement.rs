use sllab_core::measurement::{run_measurement, PointerModel};
use sllab_core::trajectories::TrajectoryKind;
use sllab_core::Error;

#[test]
fn born_frequencies_for_both_kinds() {
    let model = PointerModel::two_branch(0.8).unwrap();
    let prepared = model.prepare().unwrap();
    let c = prepared.centers();
    assert!((c[1] - c[0]).abs() > model.delta_y_min);
    for kind in [TrajectoryKind::Bohmian, TrajectoryKind::Nelson] {
        let (report, _) = prepared.sample(kind, 10_000, 2024).unwrap();
        assert!(report.within_3_sigma.iter().all(|&b| b), "{:?}", report.frequencies);
        assert!(report.overlap < 0.01);
        assert!(report.norm_drift < 1e-6);
        assert!(report.branch_norm_drift < 1e-6);
        if kind == TrajectoryKind::Bohmian {
            assert_eq!(report.crossings, Some(0));
            for c in report.conditional.iter().flatten() {
                assert!(c.system.p_value > 0.01 && c.pointer.p_value > 0.01);
            }
        }
    }
}

/// Particles assigned to a branch are distributed like that branch's packet.
/// Euler-Maruyama needs a finer step than the default for this finer check.
#[test]
fn nelson_conditional_densities() {
    let model = PointerModel { trajectory_dt: 2.5e-4, ..PointerModel::two_branch(0.5).unwrap() };
    let report = run_measurement(&model, 5000, 99, TrajectoryKind::Nelson).unwrap();
    let fits: Vec<_> = report.conditional.iter().flatten().collect();
    assert_eq!(fits.len(), 2);
    for c in fits {
        assert!(c.system.p_value > 0.01 && c.pointer.p_value > 0.01, "{c:?}");
    }
}

#[test]
fn equal_weights() {
    let model = PointerModel::two_branch(0.5).unwrap();
    let report = run_measurement(&model, 10_000, 7, TrajectoryKind::Bohmian).unwrap();
    assert!((report.frequencies[0] - 0.5).abs() <= 3.0 * (0.25f64 / 1e4).sqrt());
}

#[test]
fn uncoupled_pointer_has_no_outcome() {
    let model = PointerModel { coupling: 0.0, ..PointerModel::two_branch(0.5).unwrap() };
    assert!(matches!(model.prepare(), Err(Error::BranchOverlap { .. })));
}
