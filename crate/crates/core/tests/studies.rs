use cauchy_stokes_core::studies::convergence::{finalize_convergence, run_blowup_study};
use cauchy_stokes_core::studies::probes::{interp_ratios, run_stability_probe};
use cauchy_stokes_core::studies::robin::{run_robin_study, RobinConfig};
use cauchy_stokes_core::studies::{run_convergence_study, run_noise_study};
use cauchy_stokes_core::*;

const EPS: [f64; 5] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];

#[test]
fn zero_case_passes_trivially() {
    let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
    let rep = run_convergence_study(Method::Qr, &catalog("MS0").unwrap(), &grid, &EPS, 1).unwrap();
    assert!(rep.rows.iter().all(|r| r.error_v_l2 == 0.0 && r.error_v_h1 == 0.0 && r.error_p_l2 == 0.0));
    assert!(rep.passed(), "{:?}", rep.flags);
}

#[test]
fn rows_are_sorted_and_flags_recompute() {
    let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
    let shuffled = [1e-2, 1.0, 1e-4, 1e-1, 1e-3];
    let rep = run_convergence_study(Method::Qr, &catalog("MS2").unwrap(), &grid, &shuffled, 2).unwrap();
    let again = run_convergence_study(Method::Qr, &catalog("MS2").unwrap(), &grid, &EPS, 1).unwrap();
    assert_eq!(rep, again);
    assert!(rep.rows.windows(2).all(|w| w[0].param > w[1].param));
    assert!(rep.rows.iter().all(|r| r.error_v_l2 <= r.error_v_h1));
    let mut constants = rep.constants.clone();
    assert_eq!(finalize_convergence(Method::Qr, &rep.rows, &mut constants), rep.flags);
    assert_eq!(constants, rep.constants);
}

#[test]
fn kv_flags_recompute_and_sweep_is_threadsafe() {
    let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
    let case = catalog("MS2").unwrap();
    let a = run_convergence_study(Method::Kv, &case, &grid, &EPS, 1).unwrap();
    let b = run_convergence_study(Method::Kv, &case, &grid, &EPS, 3).unwrap();
    // Debug text so unfitted NaN constants compare equal.
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let mut constants = a.constants.clone();
    assert_eq!(finalize_convergence(Method::Kv, &a.rows, &mut constants), a.flags);
}

#[test]
fn clean_noise_rows_reproduce_the_sweep() {
    let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
    let case = catalog("MS2").unwrap();
    let conv = run_convergence_study(Method::Qr, &case, &grid, &EPS, 1).unwrap();
    let targets = [NoiseTarget::F, NoiseTarget::GD, NoiseTarget::GN];
    let noise = run_noise_study(Method::Qr, &case, &grid, &EPS, &[0.0, 1e-3], 7, &targets, 1).unwrap();
    let clean: Vec<&StudyRow> = noise.rows.iter().filter(|r| r.obs_quantity == 0.0).collect();
    assert_eq!(clean.len(), conv.rows.len());
    for (a, b) in clean.iter().zip(&conv.rows) {
        assert_eq!((a.error_v_l2, a.error_v_h1, a.error_p_l2), (b.error_v_l2, b.error_v_h1, b.error_p_l2));
    }
    let noisy: Vec<&StudyRow> = noise.rows.iter().filter(|r| r.obs_quantity > 0.0).collect();
    assert!(noisy.iter().zip(&clean).any(|(a, b)| a.error_v_l2 != b.error_v_l2));
}

#[test]
fn bad_eps_lists_are_rejected() {
    let grid = build_grid(DomainKind::UnitSquare, 8).unwrap();
    let case = catalog("MS2").unwrap();
    for bad in [&[1e-2, 1e-3, 1e-4][..], &[1e-2, 1e-3, 1e-4, 1e-5], &[1.0, 1e-2, 1e-2, 1e-6], &[1.0, 0.0, 1e-3, 1e-6]] {
        assert!(matches!(run_convergence_study(Method::Qr, &case, &grid, bad, 1), Err(Error::EpsListInvalid(_))));
    }
    assert_eq!(run_blowup_study(&case, &case, &grid, &EPS, 1).unwrap_err(), Error::CasesIdentical);
}

#[test]
fn robin_control_row_and_domain_check() {
    let square = build_grid(DomainKind::UnitSquare, 16).unwrap();
    assert_eq!(RobinConfig::uniform(&square, 1.0, 1.0, (0.0, 0.25)).unwrap_err(), Error::WrongDomainKind);
    let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
    let cfg = RobinConfig::uniform(&grid, 1.0, 1.0, (0.0, 0.25)).unwrap();
    let rep = run_robin_study(&cfg, &[grid.clone()], &[1e-1, 0.0, 1e-2], 1).unwrap();
    let control = rep.rows.iter().find(|r| r.param == 0.0).unwrap();
    assert_eq!(control.get("A"), 0.0);
    assert!(control.get("G") <= 1e-12);
    assert_eq!(rep.flag("control_n16"), Some(true));
    assert_eq!(rep.flag("monotone_n16"), Some(true));
}

#[test]
fn stability_probe_is_homogeneous_and_zero_safe() {
    let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
    let w = grid.window(0.0625, 0.1875, 0.0625, 0.1875).unwrap();
    for mode in [ProbeMode::Distributed, ProbeMode::Boundary] {
        let rep = run_stability_probe(mode, &[catalog("MS3").unwrap()], &grid, &[1.0, 2.0, 4.0], &w).unwrap();
        assert_eq!(rep.flag("homogeneity_l2"), Some(true));
        assert_eq!(rep.flag("homogeneity_curl"), Some(true));
        let zero = run_stability_probe(mode, &[catalog("MS0").unwrap()], &grid, &[1.0], &w).unwrap();
        let r = &zero.rows[0];
        assert_eq!((r.error_v_l2, r.obs_quantity, r.bound_value), (0.0, 0.0, 0.0));
    }
}

#[test]
fn trace_free_field_has_zero_ratios() {
    let grid = build_grid(DomainKind::SquareAnnulus, 32).unwrap();
    // Vanishes on the rim |x − 1/2| = 1/8 or |y − 1/2| = 1/8.
    let v = VectorField::from_fn(&grid, |x, y| {
        let b = ((x - 0.5).powi(2) - 1.0 / 64.0) * ((y - 0.5).powi(2) - 1.0 / 64.0);
        [b, 2.0 * b]
    });
    let r = interp_ratios(&v);
    assert_eq!(r[0], 0.0);
    assert!(r.iter().all(|x| x.is_finite()));
}
