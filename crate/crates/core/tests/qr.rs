use std::sync::Arc;

use cauchy_stokes_core::fields::norms::state_norm_h2h1;
use cauchy_stokes_core::mesh::GAMMA_OBS;
use cauchy_stokes_core::qr::{assemble_qr, objective, qr_apriori_check};
use cauchy_stokes_core::*;
use nalgebra::{DMatrix, DVector};

fn setup(name: &str, kind: DomainKind, n: usize) -> (Arc<Grid>, ManufacturedCase, CauchyProblem) {
    let grid = build_grid(kind, n).unwrap();
    let case = catalog(name).unwrap();
    let p = make_cauchy_data(&case, &grid, GAMMA_OBS).unwrap();
    (grid, case, p)
}

fn max_diff(a: &StokesState, b: &StokesState) -> f64 {
    a.sub(b).to_vector().iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn max_abs(s: &StokesState) -> f64 {
    s.to_vector().iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn zero_data_gives_zero_state() {
    let (_, _, p) = setup("MS0", DomainKind::SquareAnnulus, 16);
    for eps in [1e-1, 1e-5] {
        let s = solve_qr(&p, eps).unwrap();
        assert_eq!(max_abs(&s.state), 0.0);
        assert_eq!(s.diagnostics.state_norm_h2h1, 0.0);
    }
}

/// Central differences of the field-level objective vanish in every free
/// coordinate at the minimizer.
#[test]
fn minimizer_is_stationary_for_the_objective() {
    let (grid, _, p) = setup("MS2", DomainKind::UnitSquare, 8);
    let eps = 1e-2;
    let x = solve_qr(&p, eps).unwrap().state.to_vector();
    let fixed: Vec<usize> = grid.segment(GAMMA_OBS).unwrap().node_ids.iter().flat_map(|&k| [3 * k, 3 * k + 1]).collect();
    let j = |v: &[f64]| objective(&p, &StokesState::from_vector(&grid, v), eps);
    let j0 = j(&x);
    let mut worst: f64 = 0.0;
    for i in (0..x.len()).filter(|i| !fixed.contains(i)) {
        let mut a = x.clone();
        let mut b = x.clone();
        a[i] += 1e-3;
        b[i] -= 1e-3;
        let (ja, jb) = (j(&a), j(&b));
        let curv = ja + jb - 2.0 * j0;
        assert!(curv > 0.0, "coordinate {i} has no curvature");
        worst = worst.max((ja - jb).abs() / curv);
    }
    assert!(worst < 1e-6, "largest relative slope {worst:e}");
}

/// Dense solve of the assembled normal equations agrees with the Givens path.
#[test]
fn givens_matches_dense_normal_equations() {
    let (grid, _, p) = setup("MS2", DomainKind::SquareAnnulus, 8);
    let eps = 1e-3;
    let (a, b, map) = assemble_qr(&p, eps).unwrap();
    let dense = a.to_dense();
    let x = dense.cholesky().expect("spd").solve(&DVector::from_vec(b));
    let oracle = StokesState::from_vector(&grid, &map.expand(x.as_slice()));
    let s = solve_qr(&p, eps).unwrap().state;
    let rel = max_diff(&s, &oracle) / max_abs(&oracle);
    assert!(rel < 1e-9, "relative difference {rel:e}");
}

#[test]
fn regularization_enters_linearly() {
    let (_, _, p) = setup("MS2", DomainKind::UnitSquare, 8);
    let e = 1e-3;
    let a1 = assemble_qr(&p, e).unwrap().0.to_dense();
    let a2 = assemble_qr(&p, 2.0 * e).unwrap().0.to_dense();
    let a3 = assemble_qr(&p, 3.0 * e).unwrap().0.to_dense();
    let d: DMatrix<f64> = (&a3 - &a2) - (&a2 - &a1);
    assert!(d.amax() <= 1e-12 * a1.amax(), "{:e}", d.amax());
    assert!((&a2 - &a1).amax() > 0.0);
}

#[test]
fn cg_agrees_with_givens() {
    let (_, _, p) = setup("MS2", DomainKind::SquareAnnulus, 16);
    let eps = 1e-1;
    let g = solve_qr(&p, eps).unwrap();
    let c = solve_qr_cg(&p, eps, 1e-13, 50_000).unwrap();
    assert!(c.diagnostics.cg_iterations > 0);
    let rel = max_diff(&g.state, &c.state) / max_abs(&g.state);
    assert!(rel < 1e-6, "{rel:e}");
}

#[test]
fn repeat_solves_are_bitwise_equal() {
    let (_, _, p) = setup("MS3", DomainKind::SquareAnnulus, 16);
    let a = solve_qr(&p, 1e-4).unwrap().state.to_vector();
    let b = QrSolver::new(&p).unwrap().solve(1e-4).unwrap().state.to_vector();
    assert_eq!(a, b);
}

#[test]
fn solution_is_linear_in_the_data() {
    let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
    let case = catalog("MS2").unwrap();
    let p1 = make_cauchy_data(&case, &grid, GAMMA_OBS).unwrap();
    let p3 = make_cauchy_data(&case.scaled(3.0), &grid, GAMMA_OBS).unwrap();
    let s1 = solve_qr(&p1, 1e-3).unwrap().state;
    let s3 = solve_qr(&p3, 1e-3).unwrap().state;
    assert!(max_diff(&s3, &s1.scale(3.0)) <= 1e-9 * max_abs(&s3));
}

#[test]
fn optimal_value_grows_with_eps() {
    let (_, _, p) = setup("MS2", DomainKind::SquareAnnulus, 16);
    let solver = QrSolver::new(&p).unwrap();
    let mut last = 0.0;
    let mut norm = f64::INFINITY;
    for eps in [1e-8, 1e-6, 1e-4, 1e-2, 1.0] {
        let s = solver.solve(eps).unwrap();
        let j = objective(&p, &s.state, eps);
        assert!(j >= last, "objective fell at eps = {eps}");
        last = j;
        let m = state_norm_h2h1(&s.state);
        assert!(m <= norm * (1.0 + 1e-9), "state norm rose at eps = {eps}");
        norm = m;
    }
}

#[test]
fn apriori_bound_holds_for_compatible_data() {
    let (grid, case, p) = setup("MS2", DomainKind::SquareAnnulus, 16);
    let exact = case.exact_state(&grid);
    let s = solve_qr(&p, 1e-3).unwrap();
    let r = qr_apriori_check(&s, Some(&exact));
    assert!(r.applicable && r.norm_bound_ok && r.diff_bound_ok, "{r:?}");
    assert!(!qr_apriori_check(&s, None).applicable);
}

#[test]
fn interior_variant_and_errors() {
    let (grid, case, p) = setup("MS2", DomainKind::SquareAnnulus, 16);
    assert_eq!(solve_qr(&p, 0.0).unwrap_err(), Error::EpsilonNonpositive(0.0));
    assert_eq!(solve_qr_interior(&p, 1e-2).unwrap_err(), Error::EmptyWindow);
    let mut bare = p.clone();
    bare.g_n = None;
    assert_eq!(solve_qr(&bare, 1e-2).unwrap_err(), Error::MissingBoundaryData);
    let w = grid.window(0.0625, 0.1875, 0.0625, 0.1875).unwrap();
    let inner = bare.with_interior(w, case.exact_state(&grid).v);
    let s = solve_qr_interior(&inner, 1e-4).unwrap();
    let obs = s.diagnostics.obs_residual.unwrap();
    // The minimizer's objective is below the exact state's, which bounds the misfit.
    let bound = objective(&inner, &case.exact_state(&grid), 1e-4);
    assert!(obs * obs <= objective(&inner, &s.state, 1e-4) && objective(&inner, &s.state, 1e-4) <= bound, "{obs:e}");
}
