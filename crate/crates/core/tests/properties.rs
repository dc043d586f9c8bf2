use cauchy_stokes_core::fields::norms::{boundary_norm, norm_h1, norm_l2};
use cauchy_stokes_core::mesh::GAMMA_OBS;
use cauchy_stokes_core::studies::convergence::validate_eps_list;
use cauchy_stokes_core::studies::report::{fit_log_rate, log_bound, pre_floor_mask, ErrorColumn};
use cauchy_stokes_core::*;
use proptest::prelude::*;

fn permute<T: Clone>(v: &[T], keys: &[u32]) -> (Vec<T>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by_key(|&i| (keys[i % keys.len()], i));
    (idx.iter().map(|&i| v[i].clone()).collect(), idx)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn floor_mask_ignores_input_order(
        errs in prop::collection::vec(1e-6f64..1.0, 4..10),
        keys in prop::collection::vec(any::<u32>(), 10),
    ) {
        let params: Vec<f64> = (0..errs.len()).map(|k| 10f64.powi(-(k as i32))).collect();
        let mask = pre_floor_mask(&params, &errs);
        let (p2, idx) = permute(&params, &keys);
        let (e2, _) = permute(&errs, &keys);
        let m2 = pre_floor_mask(&p2, &e2);
        for (pos, &orig) in idx.iter().enumerate() {
            prop_assert_eq!(m2[pos], mask[orig]);
        }
        prop_assert!(mask[0]);
    }

    #[test]
    fn eps_validation_ignores_input_order(keys in prop::collection::vec(any::<u32>(), 6)) {
        let eps = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6];
        let (shuffled, _) = permute(&eps, &keys);
        prop_assert_eq!(validate_eps_list(&shuffled).unwrap(), eps.to_vec());
    }

    #[test]
    fn log_bound_shrinks_with_eps(m in 1e-3f64..1e3, a in -12.0f64..0.0, d in 0.1f64..4.0) {
        let (e1, e2) = (10f64.powf(a), 10f64.powf(a - d));
        prop_assert!(log_bound(m, e2, 1.0) < log_bound(m, e1, 1.0));
        prop_assert!(log_bound(m, e1, 1.0) <= log_bound(m, e1, 0.5) || m / e1.sqrt() < std::f64::consts::E - 1.0);
    }

    #[test]
    fn fitted_constant_is_the_scale(c in 0.01f64..10.0, m in 0.1f64..100.0) {
        let rows: Vec<StudyRow> = (0..6)
            .map(|k| {
                let e = 10f64.powi(-k);
                let mut r = StudyRow::new(e);
                r.error_v_l2 = c * log_bound(m, e, 1.0);
                r
            })
            .collect();
        let fit = fit_log_rate(&rows, ErrorColumn::VL2, 1.0, m).unwrap();
        prop_assert!((fit.c_fit - c).abs() <= 1e-12 * c);
        prop_assert_eq!(fit.max_violation == 0.0, c <= 1.0);
        prop_assert!((fit.q_fit.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn l2_is_dominated_by_h1(coef in prop::collection::vec(-1.0f64..1.0, 6), annulus in any::<bool>()) {
        let kind = if annulus { DomainKind::SquareAnnulus } else { DomainKind::UnitSquare };
        let grid = build_grid(kind, 16).unwrap();
        let v = VectorField::from_fn(&grid, |x, y| {
            [coef[0] + coef[1] * (3.0 * x).sin() + coef[2] * x * y, coef[3] * (2.0 * y).cos() + coef[4] * x + coef[5] * y * y]
        });
        prop_assert!(norm_l2(&v) <= norm_h1(&v));
    }

    #[test]
    fn boundary_norms_increase_with_order(vals in prop::collection::vec(-1.0f64..1.0, 8)) {
        let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
        let seg = grid.segment(GAMMA_OBS).unwrap().clone();
        let m = seg.len();
        let x: Vec<f64> = (0..m).map(|k| vals[k % 8] * (k as f64 * 0.3).sin()).collect();
        let y: Vec<f64> = (0..m).map(|k| vals[(k + 3) % 8]).collect();
        let g = BoundaryField::vector(seg, x, y);
        let mut last = 0.0;
        for s in [0.0, 0.5, 1.0, 1.5] {
            let n = boundary_norm(&g, s).unwrap();
            prop_assert!(n >= last * (1.0 - 1e-12));
            last = n;
        }
    }

    #[test]
    fn grids_are_deterministic(k in 1usize..9) {
        let n = 8 * k;
        let a = build_grid(DomainKind::SquareAnnulus, n).unwrap();
        let b = build_grid(DomainKind::SquareAnnulus, n).unwrap();
        prop_assert_eq!(&a.nodes, &b.nodes);
        let hole = n / 4 - 1;
        prop_assert_eq!(a.node_count(), (n + 1) * (n + 1) - hole * hole);
    }

    #[test]
    fn annulus_rejects_bad_resolution(n in 8usize..80) {
        let r = build_grid(DomainKind::SquareAnnulus, n);
        prop_assert_eq!(r.is_ok(), n % 8 == 0);
        prop_assert!(build_grid(DomainKind::UnitSquare, n).is_ok());
    }
}
