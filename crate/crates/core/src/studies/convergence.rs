//! ε-sweeps against manufactured solutions: convergence, noise and blow-up.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::*;
use crate::error::{Error, Result};
use crate::fields::norms::{boundary_norm, norm_h1, norm_l2, state_norm_h2h1, state_norm_h2h1_sq};
use crate::fields::ops::traction;
use crate::fields::StokesState;
use crate::kv::{KvModel, KvUnknown};
use crate::manufactured::{make_cauchy_data, make_incompatible_data, perturb, ManufacturedCase, NoiseModel, NoiseTarget};
use crate::mesh::{Grid, GAMMA_OBS};
use crate::qr::{diagnostics, CauchyProblem, QrSolver, APRIORI_TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Qr,
    Kv,
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "qr" => Ok(Method::Qr),
            "kv" => Ok(Method::Kv),
            _ => Err(format!("unknown method `{s}` (expected qr or kv)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Qr => "qr",
            Method::Kv => "kv",
        })
    }
}

pub const MIN_EPS_COUNT: usize = 4;
pub const MIN_EPS_DECADES: f64 = 4.0;
/// Relative tolerance of the reduced-gradient check.
pub const GRAD_CHECK_TOL: f64 = 1e-5;
/// Gradient at the minimizer relative to the gradient at zero.
pub const OPTIMALITY_TOL: f64 = 1e-6;
/// Required growth of the state norm on incompatible data.
pub const BLOWUP_FACTOR: f64 = 10.0;

/// Checks an ε list and returns it sorted in decreasing order.
///
/// Input order is not significant.
pub fn validate_eps_list(eps: &[f64]) -> Result<Vec<f64>> {
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::EpsListInvalid(format!("entry {e} is not a positive number")));
    }
    if eps.len() < MIN_EPS_COUNT {
        return Err(Error::EpsListInvalid(format!("{} entries, need at least {MIN_EPS_COUNT}", eps.len())));
    }
    let mut s = eps.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::EpsListInvalid("repeated entry".into()));
    }
    let span = (s[0] / s[s.len() - 1]).log10();
    if span < MIN_EPS_DECADES - 1e-9 {
        return Err(Error::EpsListInvalid(format!("spans {span:.2} decades, need {MIN_EPS_DECADES}")));
    }
    Ok(s)
}

pub(crate) fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool")
}

/// `(‖v−v*‖_{L²}, ‖v−v*‖_{H¹}, ‖p−p*‖_{L²})`.
pub fn state_errors(s: &StokesState, exact: &StokesState) -> (f64, f64, f64) {
    let e = s.sub(exact);
    (norm_l2(&e.v), norm_h1(&e.v), norm_l2(&e.p))
}

fn base_row(eps: f64, s: &StokesState, exact: &StokesState, m: f64) -> StudyRow {
    let (a, b, c) = state_errors(s, exact);
    let mut r = StudyRow::new(eps);
    r.error_v_l2 = a;
    r.error_v_h1 = b;
    r.error_p_l2 = c;
    r.bound_value = log_bound(m, eps, 1.0);
    r.set("bound_half", log_bound(m, eps, 0.5));
    r
}

fn row_envelope(r: &StudyRow) -> bool {
    r.error_v_l2 <= r.bound_value && r.error_v_h1 <= r.get("bound_half") && r.error_p_l2 <= r.get("bound_half")
}

fn qr_row(solver: &QrSolver, eps: f64, exact: &StokesState, m: f64) -> Result<StudyRow> {
    let sol = solver.solve(eps)?;
    let d = &sol.diagnostics;
    let mut r = base_row(eps, &sol.state, exact, m);
    r.obs_quantity = d.state_norm_h2h1;
    r.residual_pde = d.pde_residual_l2;
    r.residual_div = d.div_h1_norm;
    r.set("state_norm", d.state_norm_h2h1);
    r.set("pde_div_sq", d.pde_residual_l2.powi(2) + d.div_h1_norm.powi(2));
    r.set("traction_residual", d.bc_traction_residual);
    r.flag = row_envelope(&r);
    Ok(r)
}

fn direction(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn kv_row(model: &KvModel, eps: f64, k: usize, exact: &StokesState, m: f64) -> Result<StudyRow> {
    let sol = model.minimize(eps)?;
    let mut r = base_row(eps, &sol.state, exact, m);
    let dim = model.reduced_dim();
    r.obs_quantity = sol.f_value;
    let problem = model.problem();
    let d = diagnostics(problem, &sol.state, eps);
    r.residual_pde = d.pde_residual_l2;
    r.residual_div = d.div_h1_norm;
    r.set("F_value", sol.f_value);
    r.set("F_eps_value", sol.f_eps_value);
    r.set("norm_sq_sum", sol.norm_phi_state.powi(2) + sol.norm_psi_state.powi(2));
    r.set("traction_gap", sol.traction_gap_h12);
    r.set("hessian_min_eig", sol.hessian_min_eig);
    let zero = KvUnknown::zeros(model.rim());
    let dir = direction(dim, 0x5eed_0000 + k as u64);
    r.set("grad_check", super::super::kv::gradient_check_with(model, eps, &zero, &dir)?);
    let g0 = model.model_gradient(&vec![0.0; dim], eps);
    let gs = model.model_gradient(&sol.unknown.stacked(), eps);
    let nrm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    r.set("optimality", nrm(&gs) / nrm(&g0).max(f64::MIN_POSITIVE));
    let (a, b, c) = state_errors(&sol.alt_state, exact);
    r.set("alt_error_v_l2", a);
    r.set("alt_error_v_h1", b);
    r.set("alt_error_p_l2", c);
    r.flag = row_envelope(&r);
    Ok(r)
}

/// Constants of the sweep that do not depend on ε.
fn sweep_constants(method: Method, problem: &CauchyProblem, exact: &StokesState, model: Option<&KvModel>) -> Result<BTreeMap<String, f64>> {
    let mut c = BTreeMap::new();
    let m = state_norm_h2h1(exact);
    c.insert("M_h".into(), m);
    match method {
        Method::Qr => {
            let d = diagnostics(problem, exact, 1.0);
            c.insert("rho_h".into(), d.pde_residual_l2.powi(2) + d.div_h1_norm.powi(2));
        }
        Method::Kv => {
            let model = model.expect("kv model");
            let u = KvUnknown::of_state(exact, problem.coeffs.nu, model.rim());
            let (sphi, spsi) = model.direct_states(&u)?;
            let (rho, _) = model.direct_value(&u, 0.0)?;
            c.insert("rho_h".into(), rho);
            let cross = StokesState::new(sphi.v.clone(), spsi.p.clone());
            let gn = problem.g_n.as_ref().ok_or(Error::MissingBoundaryData)?;
            let tg = boundary_norm(&traction(&cross, problem.coeffs.nu, &problem.obs).sub(gn), 0.5)?;
            c.insert("traction_floor".into(), tg);
            c.insert("exact_norm_sq_sum".into(), state_norm_h2h1_sq(&sphi) + state_norm_h2h1_sq(&spsi));
        }
    }
    Ok(c)
}

/// Recomputes every flag of a convergence report from its rows and constants.
pub fn finalize_convergence(method: Method, rows: &[StudyRow], constants: &mut BTreeMap<String, f64>) -> BTreeMap<String, bool> {
    let m = constants["M_h"];
    let rho = constants["rho_h"];
    let params: Vec<f64> = rows.iter().map(|r| r.param).collect();
    let vl2: Vec<f64> = rows.iter().map(|r| r.error_v_l2).collect();
    let mask = pre_floor_mask(&params, &vl2);
    let mut flags = BTreeMap::new();
    for col in ErrorColumn::ALL {
        let vals: Vec<f64> = rows.iter().map(|r| col.get(r)).collect();
        let env = rows.iter().all(|r| col.get(r) <= log_bound(m, r.param, col.exponent()));
        flags.insert(format!("envelope_{}", col.name()), env);
        flags.insert(format!("monotone_{}", col.name()), monotone_on(&params, &vals, &mask));
        match fit_log_rate_masked(rows, &mask, col, col.exponent(), m) {
            Ok(fit) => {
                constants.insert(format!("C_fit_{}", col.name()), fit.c_fit);
                if let Some(q) = fit.q_fit {
                    constants.insert(format!("q_fit_{}", col.name()), q);
                }
            }
            Err(_) => {
                constants.insert(format!("C_fit_{}", col.name()), f64::NAN);
            }
        }
    }
    let n_pre = mask.iter().filter(|k| **k).count();
    constants.insert("pre_floor_rows".into(), n_pre as f64);
    flags.insert("fit_rows".into(), n_pre >= MIN_FIT_ROWS || rows.iter().all(|r| r.error_v_l2 == 0.0));
    match method {
        Method::Qr => {
            flags.insert(
                "apriori_norm".into(),
                rows.iter().all(|r| r.get("state_norm") <= (1.0 + APRIORI_TAU) * m),
            );
            flags.insert(
                "qr4".into(),
                rows.iter().all(|r| r.get("pde_div_sq") <= r.param * m * m + 2.0 * rho),
            );
        }
        Method::Kv => {
            let slack = 1.0 + APRIORI_TAU;
            flags.insert(
                "energy_gap".into(),
                rows.iter().all(|r| r.get("F_value") <= 2.0 * slack * r.param * m * m + 2.0 * rho),
            );
            flags.insert(
                "norm_bound".into(),
                rows.iter().all(|r| {
                    let floor = (rho - r.get("F_value")).max(0.0) / r.param;
                    r.get("norm_sq_sum") <= 2.0 * slack * m * m + floor
                }),
            );
            let tg: Vec<f64> = rows.iter().map(|r| r.get("traction_gap")).collect();
            let env: Vec<f64> = params.iter().map(|e| e.sqrt()).collect();
            // Oracle floor, or the sweep's own ε → 0 plateau when that sits higher.
            let last = params.iter().enumerate().fold(0, |a, (i, &e)| if e < params[a] { i } else { a });
            let floor = constants["traction_floor"].max(tg[last]);
            constants.insert("traction_floor_used".into(), floor);
            let (c, ok) = calibrated_envelope(&params, &tg, &env, floor);
            constants.insert("C_fit_traction".into(), c);
            flags.insert("traction_gap".into(), ok);
            flags.insert("hessian_pd".into(), rows.iter().all(|r| r.get("hessian_min_eig") > 0.0));
            flags.insert("gradient_check".into(), rows.iter().all(|r| r.get("grad_check") <= GRAD_CHECK_TOL));
            flags.insert("optimality".into(), rows.iter().all(|r| r.get("optimality") <= OPTIMALITY_TOL));
        }
    }
    flags
}

/// Sweeps `eps_list` on the compatible Cauchy data of `case` on `gamma_obs`.
pub fn run_convergence_study(
    method: Method,
    case: &ManufacturedCase,
    grid: &Arc<Grid>,
    eps_list: &[f64],
    threads: usize,
) -> Result<StudyReport> {
    let eps = validate_eps_list(eps_list)?;
    let problem = make_cauchy_data(case, grid, GAMMA_OBS)?;
    let exact = case.exact_state(grid);
    let (rows, constants) = sweep(method, &problem, &exact, &eps, threads)?;
    let mut rep = StudyReport::new(StudyKind::Convergence);
    echo_common(&mut rep, method, case, grid, &eps);
    rep.rows = rows;
    rep.constants = constants;
    rep.flags = finalize_convergence(method, &rep.rows, &mut rep.constants);
    Ok(rep)
}

fn echo_common(rep: &mut StudyReport, method: Method, case: &ManufacturedCase, grid: &Grid, eps: &[f64]) {
    rep.echo("method", method);
    rep.echo("case", case.name);
    rep.echo("domain", format!("{:?}", grid.kind));
    rep.echo("n", grid.n);
    rep.echo("eps", eps.iter().map(|e| format!("{e:e}")).collect::<Vec<_>>().join(","));
}

fn sweep(
    method: Method,
    problem: &CauchyProblem,
    exact: &StokesState,
    eps: &[f64],
    threads: usize,
) -> Result<(Vec<StudyRow>, BTreeMap<String, f64>)> {
    let m = state_norm_h2h1(exact);
    let pool = pool(threads);
    match method {
        Method::Qr => {
            let solver = QrSolver::new(problem)?;
            let consts = sweep_constants(method, problem, exact, None)?;
            let rows = pool.install(|| eps.par_iter().map(|&e| qr_row(&solver, e, exact, m)).collect::<Result<Vec<_>>>())?;
            Ok((rows, consts))
        }
        Method::Kv => {
            let model = KvModel::new(problem)?;
            let consts = sweep_constants(method, problem, exact, Some(&model))?;
            let rows = pool.install(|| {
                eps.par_iter()
                    .enumerate()
                    .map(|(k, &e)| kv_row(&model, e, k, exact, m))
                    .collect::<Result<Vec<_>>>()
            })?;
            Ok((rows, consts))
        }
    }
}

/// Error measure of the noise study: `(‖v−v*‖²_{H¹} + ‖p−p*‖²_{L²})^{1/2}`.
pub fn noise_error(r: &StudyRow) -> f64 {
    r.error_v_h1.hypot(r.error_p_l2)
}

/// `δ/√ε + M/ln(1+M/√ε)^{1/2}`.
pub fn noise_envelope(delta: f64, eps: f64, m: f64) -> f64 {
    delta / eps.sqrt() + log_bound(m, eps, 0.5)
}

/// Interior minimum strictly below both ends of the sweep.
pub fn u_shaped(params: &[f64], values: &[f64]) -> bool {
    let mut idx: Vec<usize> = (0..params.len()).collect();
    idx.sort_by(|&a, &b| params[b].total_cmp(&params[a]));
    let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    if v.len() < 3 {
        return false;
    }
    let (k, min) = v.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &x)| if x < a.1 { (i, x) } else { a });
    k > 0 && k < v.len() - 1 && min < v[0] && min < v[v.len() - 1]
}

fn delta_key(delta: f64) -> String {
    format!("delta_{delta:e}")
}

/// Recomputes the noise-study flags and per-δ constants.
pub fn finalize_noise(rows: &[StudyRow], constants: &mut BTreeMap<String, f64>) -> BTreeMap<String, bool> {
    let m = constants["M_h"];
    let mut deltas: Vec<f64> = rows.iter().map(|r| r.obs_quantity).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut flags = BTreeMap::new();
    for d in deltas {
        let sub: Vec<&StudyRow> = rows.iter().filter(|r| r.obs_quantity == d).collect();
        let params: Vec<f64> = sub.iter().map(|r| r.param).collect();
        let errs: Vec<f64> = sub.iter().map(|r| noise_error(r)).collect();
        let env: Vec<f64> = params.iter().map(|&e| noise_envelope(d, e, m)).collect();
        let (c, ok) = calibrated_envelope(&params, &errs, &env, 0.0);
        let k = errs.iter().enumerate().fold(0, |a, (i, &x)| if x < errs[a] { i } else { a });
        constants.insert(format!("C_fit_{}", delta_key(d)), c);
        constants.insert(format!("argmin_eps_{}", delta_key(d)), params[k]);
        if d > 0.0 {
            flags.insert(format!("u_shape_{}", delta_key(d)), u_shaped(&params, &errs));
            flags.insert(format!("envelope_{}", delta_key(d)), ok);
        }
    }
    flags
}

/// ε-sweeps on seeded perturbations of the Cauchy data, one per δ.
#[allow(clippy::too_many_arguments)]
pub fn run_noise_study(
    method: Method,
    case: &ManufacturedCase,
    grid: &Arc<Grid>,
    eps_list: &[f64],
    delta_list: &[f64],
    seed: u64,
    targets: &[NoiseTarget],
    threads: usize,
) -> Result<StudyReport> {
    let eps = validate_eps_list(eps_list)?;
    if let Some(d) = delta_list.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::EpsListInvalid(format!("noise level {d} is negative")));
    }
    let mut deltas = delta_list.to_vec();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let clean = make_cauchy_data(case, grid, GAMMA_OBS)?;
    let exact = case.exact_state(grid);
    let mut rep = StudyReport::new(StudyKind::Noise);
    echo_common(&mut rep, method, case, grid, &eps);
    rep.echo("delta", deltas.iter().map(|d| format!("{d:e}")).collect::<Vec<_>>().join(","));
    rep.echo("seed", seed);
    rep.echo("targets", targets.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(","));
    rep.constants.insert("M_h".into(), state_norm_h2h1(&exact));
    for &d in &deltas {
        let model = NoiseModel { delta: d, seed, targets: targets.to_vec() };
        let problem = perturb(&clean, &model);
        let (rows, _) = sweep(method, &problem, &exact, &eps, threads)?;
        rep.rows.extend(rows.into_iter().map(|mut r| {
            r.obs_quantity = d;
            r.label = format!("delta={d:e}");
            r
        }));
    }
    rep.flags = finalize_noise(&rep.rows, &mut rep.constants);
    Ok(rep)
}

/// QR sweep on incompatible data: `g_D`, `f` from `a` and `g_N` from `b`.
pub fn run_blowup_study(
    a: &ManufacturedCase,
    b: &ManufacturedCase,
    grid: &Arc<Grid>,
    eps_list: &[f64],
    threads: usize,
) -> Result<StudyReport> {
    let eps = validate_eps_list(eps_list)?;
    let problem = make_incompatible_data(a, b, grid, GAMMA_OBS)?;
    let solver = QrSolver::new(&problem)?;
    let mut rep = StudyReport::new(StudyKind::Convergence);
    rep.echo("method", Method::Qr);
    rep.echo("case", format!("{},{}", a.name, b.name));
    rep.echo("domain", format!("{:?}", grid.kind));
    rep.echo("n", grid.n);
    rep.echo("eps", eps.iter().map(|e| format!("{e:e}")).collect::<Vec<_>>().join(","));
    rep.rows = pool(threads).install(|| {
        eps.par_iter()
            .map(|&e| {
                let sol = solver.solve(e)?;
                let d = &sol.diagnostics;
                let mut r = StudyRow::new(e);
                r.obs_quantity = d.state_norm_h2h1;
                r.residual_pde = d.pde_residual_l2;
                r.residual_div = d.div_h1_norm;
                r.set("traction_residual", d.bc_traction_residual);
                r.label = "incompatible".into();
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    rep.flags = finalize_blowup(&rep.rows, &mut rep.constants);
    Ok(rep)
}

pub fn finalize_blowup(rows: &[StudyRow], constants: &mut BTreeMap<String, f64>) -> BTreeMap<String, bool> {
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let ratio = last.obs_quantity / first.obs_quantity;
    constants.insert("blowup_ratio".into(), ratio);
    BTreeMap::from([("blowup".to_string(), ratio >= BLOWUP_FACTOR)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_list_rules() {
        assert_eq!(validate_eps_list(&[1e-6, 1e-2, 1e-4, 1e-3]).unwrap(), vec![1e-2, 1e-3, 1e-4, 1e-6]);
        assert!(validate_eps_list(&[1e-2, 1e-3, 1e-4]).is_err());
        assert!(validate_eps_list(&[1e-2, 1e-3, 1e-4, 1e-5]).is_err());
        assert!(validate_eps_list(&[1e-2, 1e-2, 1e-4, 1e-6]).is_err());
        assert!(validate_eps_list(&[1e-2, 0.0, 1e-4, 1e-6]).is_err());
    }

    #[test]
    fn u_shape_detection() {
        let p = [1.0, 1e-1, 1e-2, 1e-3];
        assert!(u_shaped(&p, &[3.0, 1.0, 2.0, 4.0]));
        assert!(!u_shaped(&p, &[3.0, 2.0, 1.0, 0.5]));
        assert!(!u_shaped(&p, &[1.0, 1.0, 1.0, 1.0]));
    }

    #[test]
    fn method_round_trip() {
        for m in [Method::Qr, Method::Kv] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("tv".parse::<Method>().is_err());
    }
}
