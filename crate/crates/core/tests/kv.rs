use std::sync::Arc;

use cauchy_stokes_core::kv::KvModel;
use cauchy_stokes_core::mesh::{GAMMA_C, GAMMA_OBS};
use cauchy_stokes_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(name: &str, n: usize) -> (Arc<Grid>, ManufacturedCase, CauchyProblem) {
    let grid = build_grid(DomainKind::SquareAnnulus, n).unwrap();
    let case = catalog(name).unwrap();
    let p = make_cauchy_data(&case, &grid, GAMMA_OBS).unwrap();
    (grid, case, p)
}

fn random(dim: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()
}

#[test]
fn zero_data_gives_zero_minimizer() {
    let (_, _, p) = problem("MS0", 16);
    let s = minimize_kv(&p, 1e-3).unwrap();
    assert_eq!(s.f_value, 0.0);
    assert!(s.unknown.stacked().iter().all(|v| *v == 0.0));
}

#[test]
fn exact_unknown_beats_zero() {
    let (grid, case, p) = problem("MS2", 16);
    let rim = grid.segment(GAMMA_C).unwrap().clone();
    let exact = KvUnknown::of_state(&case.exact_state(&grid), case.nu, &rim);
    let (f_exact, _) = kv_value(&exact, &p, 1e-3).unwrap();
    let (f_zero, _) = kv_value(&KvUnknown::zeros(&rim), &p, 1e-3).unwrap();
    assert!(f_exact < 1e-2 * f_zero, "{f_exact:e} vs {f_zero:e}");
}

/// `F` is a quadratic form in the unknown and the data jointly.
#[test]
fn joint_scaling_is_quadratic() {
    let (grid, case, p) = problem("MS3", 16);
    let rim = grid.segment(GAMMA_C).unwrap().clone();
    let u = KvUnknown::from_stacked(&rim, &random(4 * rim.len(), 1));
    let t = 2.5;
    let pt = make_cauchy_data(&case.scaled(t), &grid, GAMMA_OBS).unwrap();
    let ut = KvUnknown::from_stacked(&rim, &u.stacked().iter().map(|v| t * v).collect::<Vec<_>>());
    let (a, ae) = kv_value(&u, &p, 1e-2).unwrap();
    let (b, be) = kv_value(&ut, &pt, 1e-2).unwrap();
    assert!((b - t * t * a).abs() <= 1e-10 * b, "{a:e} {b:e}");
    assert!((be - t * t * ae).abs() <= 1e-10 * be);
}

#[test]
fn reduced_gradient_matches_differences() {
    let (grid, _, p) = problem("MS2", 16);
    let rim = grid.segment(GAMMA_C).unwrap().clone();
    let dim = 4 * rim.len();
    for seed in 0..3 {
        let u = KvUnknown::from_stacked(&rim, &random(dim, 10 + seed));
        let err = kv_gradient_check(&p, 1e-3, &u, &random(dim, 20 + seed)).unwrap();
        assert!(err <= 1e-5, "seed {seed}: {err:e}");
    }
    assert_eq!(kv_gradient_check(&p, 1e-3, &KvUnknown::zeros(&rim), &vec![0.0; dim]).unwrap_err(), Error::ZeroDirection);
}

#[test]
fn minimizer_beats_random_probes() {
    let (_, _, p) = problem("MS2", 16);
    let model = KvModel::new(&p).unwrap();
    let eps = 1e-4;
    let s = model.minimize(eps).unwrap();
    let (_, best) = model.direct_value(&s.unknown, eps).unwrap();
    assert!((best - s.f_eps_value).abs() <= 1e-8 * best.max(1e-300));
    let u = s.unknown.stacked();
    for seed in 0..5 {
        let d = random(u.len(), 30 + seed);
        for step in [1e-3, 1e-1] {
            let w: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let (_, v) = model.direct_value(&KvUnknown::from_stacked(model.rim(), &w), eps).unwrap();
            assert!(v >= best, "probe {seed} step {step}: {v:e} < {best:e}");
        }
    }
    assert!(s.hessian_min_eig > 0.0);
}

#[test]
fn affine_model_matches_direct_solves() {
    let (_, _, p) = problem("MS1", 16);
    let model = KvModel::new(&p).unwrap();
    let u = random(model.reduced_dim(), 5);
    let (a, b) = model.states(&u);
    let (c, d) = model.direct_states(&KvUnknown::from_stacked(model.rim(), &u)).unwrap();
    let diff = |x: &StokesState, y: &StokesState| x.sub(y).to_vector().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(diff(&a, &c) < 1e-9 && diff(&b, &d) < 1e-9);
}

#[test]
fn domain_and_eps_are_checked() {
    let grid = build_grid(DomainKind::UnitSquare, 16).unwrap();
    let p = make_cauchy_data(&catalog("MS2").unwrap(), &grid, GAMMA_OBS).unwrap();
    assert_eq!(minimize_kv(&p, 1e-3).unwrap_err(), Error::WrongDomainKind);
    let (_, _, p) = problem("MS2", 16);
    assert_eq!(minimize_kv(&p, -1.0).unwrap_err(), Error::EpsilonNonpositive(-1.0));
}
