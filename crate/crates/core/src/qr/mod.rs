//! Quasi-reversibility: the Cauchy problem as a regularized least-squares problem.
//!
//! The discrete objective is
//! `‖−νΔv + ∇p − f‖² + ‖div v − d‖²_{H¹} + ε(‖v‖²_{H²} + ‖p‖²_{H¹}) + β_N‖σn − g_N‖²_{Γ_obs}`
//! with `v = g_D` imposed on the observation segment by elimination.
//! The interior variant replaces both boundary terms by `‖v − v_obs‖²_{L²(ω)}`.

pub mod system;
pub mod terms;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::norms::{boundary_l2, h1_semi_sq, l2_sq, norm_h1, norm_l2, norm_l2_on, state_norm_h2h1, state_norm_h2h1_sq};
use crate::fields::ops::{div_residual, oseen_residual, traction};
use crate::fields::{BoundaryField, OseenCoefficients, ScalarField, StokesState, VectorField};
use crate::linalg::{assemble_normal, cg_solve, BandedQr, CholeskyFactor, LeastSquaresTerm, SolveMethod, SolveReport, SparseMatrix};
use crate::mesh::{BoundarySegment, Grid, SubdomainWindow};
use system::{combine_and_solve, givens_factor, UnknownMap};

/// Volume observation `v = v_obs` on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorObservation {
    pub window: SubdomainWindow,
    pub v_obs: VectorField,
}

/// One data-completion instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyProblem {
    pub grid: Arc<Grid>,
    pub coeffs: OseenCoefficients,
    pub f: VectorField,
    pub d: ScalarField,
    pub obs: Arc<BoundarySegment>,
    pub g_d: Option<BoundaryField>,
    pub g_n: Option<BoundaryField>,
    pub interior: Option<InteriorObservation>,
}

impl CauchyProblem {
    /// Replaces the boundary data by a volume observation of `v` on `window`.
    pub fn with_interior(mut self, window: SubdomainWindow, v_obs: VectorField) -> Self {
        self.interior = Some(InteriorObservation { window, v_obs });
        self
    }
}

/// Boundary penalty weight `β_N = 1/h`.
pub fn beta_n(grid: &Grid) -> f64 {
    1.0 / grid.h
}

pub const BETA_OMEGA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrDiagnostics {
    pub epsilon: f64,
    pub pde_residual_l2: f64,
    pub div_h1_norm: f64,
    pub bc_dirichlet_residual: f64,
    pub bc_traction_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub obs_residual: Option<f64>,
    pub state_norm_h2h1: f64,
    pub cg_iterations: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct QrSolution {
    pub state: StokesState,
    pub epsilon: f64,
    pub diagnostics: QrDiagnostics,
    pub report: SolveReport,
}

fn check_problem(problem: &CauchyProblem, eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::EpsilonNonpositive(eps));
    }
    if problem.d.max_abs() != 0.0 {
        return Err(Error::NonzeroDivergenceData);
    }
    Ok(())
}

fn boundary_data(problem: &CauchyProblem) -> Result<(&BoundaryField, &BoundaryField)> {
    match (&problem.g_d, &problem.g_n) {
        (Some(gd), Some(gn)) => Ok((gd, gn)),
        _ => Err(Error::MissingBoundaryData),
    }
}

/// ε-independent terms and the elimination map of the boundary variant.
fn boundary_terms(problem: &CauchyProblem) -> Result<(Vec<LeastSquaresTerm>, UnknownMap)> {
    let (gd, gn) = boundary_data(problem)?;
    let grid = &problem.grid;
    let mut t = terms::pde_terms(grid, &problem.coeffs, &problem.f, &problem.d);
    t.push(LeastSquaresTerm::new(
        "traction",
        terms::traction(grid, &problem.obs, problem.coeffs.nu, None),
        terms::boundary_target(&problem.obs, &gn.comps),
        beta_n(grid),
    ));
    let map = UnknownMap::new(
        3 * grid.node_count(),
        &terms::velocity_indices(&problem.obs),
        &terms::velocity_values(&gd.comps),
    );
    Ok((t, map))
}

fn interior_terms(problem: &CauchyProblem) -> Result<(Vec<LeastSquaresTerm>, UnknownMap)> {
    let obs = problem.interior.as_ref().ok_or(Error::EmptyWindow)?;
    if obs.window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let grid = &problem.grid;
    let mut t = terms::pde_terms(grid, &problem.coeffs, &problem.f, &problem.d);
    t.push(LeastSquaresTerm::new(
        "observation",
        terms::observation(grid, &obs.window),
        terms::observation_target(&obs.window, &obs.v_obs),
        BETA_OMEGA,
    ));
    Ok((t, UnknownMap::new(3 * grid.node_count(), &[], &[])))
}

fn regularization_term(grid: &Grid, eps: f64) -> LeastSquaresTerm {
    let g = terms::regularization(grid);
    let n = g.nrows();
    LeastSquaresTerm::new("regularization", g, vec![0.0; n], eps)
}

/// Normal equations of the boundary variant over the free unknowns.
pub fn assemble_qr(problem: &CauchyProblem, eps: f64) -> Result<(SparseMatrix, Vec<f64>, UnknownMap)> {
    check_problem(problem, eps)?;
    let (mut t, map) = boundary_terms(problem)?;
    t.push(regularization_term(&problem.grid, eps));
    let restricted: Vec<_> = t.iter().map(|t| map.restrict(t)).collect();
    let (a, b) = assemble_normal(&restricted)?;
    Ok((a, b, map))
}

/// Normal equations of the interior-observation variant.
pub fn assemble_qr_interior(problem: &CauchyProblem, eps: f64) -> Result<(SparseMatrix, Vec<f64>, UnknownMap)> {
    check_problem(problem, eps)?;
    let (mut t, map) = interior_terms(problem)?;
    t.push(regularization_term(&problem.grid, eps));
    let (a, b) = assemble_normal(&t)?;
    Ok((a, b, map))
}

/// Discrete objective `J_ε` evaluated from field operations (no assembly).
pub fn objective(problem: &CauchyProblem, state: &StokesState, eps: f64) -> f64 {
    let mut j = l2_sq(&oseen_residual(state, &problem.coeffs, &problem.f));
    let dr = div_residual(state, &problem.d);
    j += l2_sq(&dr) + h1_semi_sq(&dr);
    j += pressure_stabilization_sq(state);
    j += eps * state_norm_h2h1_sq(state);
    match &problem.interior {
        Some(obs) => {
            let r = norm_l2_on(&state.v.sub(&obs.v_obs), &obs.window);
            j += BETA_OMEGA * r * r;
        }
        None => {
            if let Some(gn) = &problem.g_n {
                let r = boundary_l2(&traction(state, problem.coeffs.nu, &problem.obs).sub(gn));
                j += beta_n(&problem.grid) * r * r;
            }
        }
    }
    j
}

/// `‖h (Δ − ∂ₓ∂ₓ − ∂ᵧ∂ᵧ) p‖²`.
pub fn pressure_stabilization_sq(state: &StokesState) -> f64 {
    let grid = state.grid();
    let ops = grid.ops();
    let p = &state.p.values;
    let (a, b, c) = (ops.lap.mul_vec(p), ops.dx_dx.mul_vec(p), ops.dy_dy.mul_vec(p));
    let r: Vec<f64> = (0..p.len()).map(|i| grid.h * (a[i] - b[i] - c[i])).collect();
    l2_sq(&ScalarField::new(grid.clone(), r))
}

/// Residual diagnostics of any state against the problem data.
pub fn diagnostics(problem: &CauchyProblem, state: &StokesState, eps: f64) -> QrDiagnostics {
    let pde = norm_l2(&oseen_residual(state, &problem.coeffs, &problem.f));
    let div = norm_h1(&div_residual(state, &problem.d));
    let seg = &problem.obs;
    let bc_d = problem
        .g_d
        .as_ref()
        .map_or(0.0, |g| boundary_l2(&BoundaryField::trace(&state.v, seg).sub(g)));
    let bc_t = problem
        .g_n
        .as_ref()
        .map_or(0.0, |g| boundary_l2(&traction(state, problem.coeffs.nu, seg).sub(g)));
    let obs = problem.interior.as_ref().map(|o| norm_l2_on(&state.v.sub(&o.v_obs), &o.window));
    QrDiagnostics {
        epsilon: eps,
        pde_residual_l2: pde,
        div_h1_norm: div,
        bc_dirichlet_residual: if problem.interior.is_some() { 0.0 } else { bc_d },
        bc_traction_residual: if problem.interior.is_some() { 0.0 } else { bc_t },
        obs_residual: obs,
        state_norm_h2h1: state_norm_h2h1(state),
        cg_iterations: 0,
        wall_ms: 0.0,
    }
}

/// Factorizations reused across an ε sweep for one problem.
///
/// The ε-independent rows are reduced once to a banded triangle `R_T` by
/// Givens rotations, the regularization Gram matrix once by Cholesky. Each ε
/// then costs one banded QR of `[R_T; √ε Lᵀ]`; the normal equations are never
/// formed, which keeps small ε tractable in double precision.
pub struct QrSolver {
    problem: CauchyProblem,
    map: UnknownMap,
    rt: BandedQr,
    lt_rows: Vec<(usize, Vec<f64>)>,
    c: Vec<f64>,
    setup_ms: f64,
}

impl QrSolver {
    pub fn new(problem: &CauchyProblem) -> Result<Self> {
        check_problem(problem, 1.0)?;
        let start = Instant::now();
        let (t, map) = if problem.interior.is_some() { interior_terms(problem)? } else { boundary_terms(problem)? };
        let restricted: Vec<_> = t.iter().map(|t| map.restrict(t)).collect();
        let rt = givens_factor(map.n_free(), &restricted);
        let reg = map.restrict(&regularization_term(&problem.grid, 1.0));
        let (g, b) = assemble_normal(std::slice::from_ref(&reg))?;
        let chol = CholeskyFactor::new(&g)?;
        let mut c = b;
        chol.forward(&mut c);
        let lt_rows = chol.transpose_rows();
        Ok(QrSolver {
            problem: problem.clone(),
            map,
            rt,
            lt_rows,
            c,
            setup_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn problem(&self) -> &CauchyProblem {
        &self.problem
    }

    pub fn unknowns(&self) -> usize {
        self.map.n_free()
    }

    pub fn solve(&self, eps: f64) -> Result<QrSolution> {
        check_problem(&self.problem, eps)?;
        let start = Instant::now();
        let x = combine_and_solve(&self.rt, &self.lt_rows, &self.c, eps)?;
        let full = self.map.expand(&x);
        let state = StokesState::from_vector(&self.problem.grid, &full);
        let wall_ms = self.setup_ms + start.elapsed().as_secs_f64() * 1e3;
        let mut diagnostics = diagnostics(&self.problem, &state, eps);
        diagnostics.wall_ms = wall_ms;
        let report = SolveReport {
            method: SolveMethod::Givens,
            iterations: 0,
            relative_residual: normal_residual(&self.problem, &self.map, &x, eps)?,
            wall_ms,
        };
        Ok(QrSolution { state, epsilon: eps, diagnostics, report })
    }
}

/// `‖A x − b‖/‖b‖` of the normal equations, as an a-posteriori check.
fn normal_residual(problem: &CauchyProblem, map: &UnknownMap, x: &[f64], eps: f64) -> Result<f64> {
    let (a, b, _) = if problem.interior.is_some() {
        assemble_qr_interior(problem, eps)?
    } else {
        let (a, b, m) = assemble_qr(problem, eps)?;
        debug_assert_eq!(m.n_free(), map.n_free());
        (a, b, m)
    };
    let ax = a.mul_vec(x);
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rn = ax.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    Ok(if bn == 0.0 { rn } else { rn / bn })
}

/// Same minimizer by Jacobi-preconditioned CG on the normal equations.
///
/// Only practical for moderate `ε`; the normal matrix has condition number
/// growing like `1/ε`.
pub fn solve_qr_cg(problem: &CauchyProblem, eps: f64, tol: f64, max_iter: usize) -> Result<QrSolution> {
    check_problem(problem, eps)?;
    let start = Instant::now();
    let (a, b, map) = if problem.interior.is_some() { assemble_qr_interior(problem, eps)? } else { assemble_qr(problem, eps)? };
    let (x, mut report) = cg_solve(&a, &b, tol, max_iter)?;
    let state = StokesState::from_vector(&problem.grid, &map.expand(&x));
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut diagnostics = diagnostics(problem, &state, eps);
    diagnostics.cg_iterations = report.iterations;
    diagnostics.wall_ms = report.wall_ms;
    Ok(QrSolution { state, epsilon: eps, diagnostics, report })
}

pub fn solve_qr(problem: &CauchyProblem, eps: f64) -> Result<QrSolution> {
    if problem.interior.is_some() {
        return Err(Error::MissingBoundaryData);
    }
    QrSolver::new(problem)?.solve(eps)
}

pub fn solve_qr_interior(problem: &CauchyProblem, eps: f64) -> Result<QrSolution> {
    if problem.interior.is_none() {
        return Err(Error::EmptyWindow);
    }
    QrSolver::new(problem)?.solve(eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub applicable: bool,
    pub m_h: f64,
    pub state_norm: f64,
    pub diff_norm: f64,
    pub norm_bound_ok: bool,
    pub diff_bound_ok: bool,
}

pub const APRIORI_TAU: f64 = 0.1;

/// Checks `‖(v_ε,p_ε)‖ ≤ (1+τ)M_h` and `‖(v_ε−v, p_ε−p)‖ ≤ (1+τ)M_h`.
pub fn qr_apriori_check(solution: &QrSolution, exact: Option<&StokesState>) -> AprioriReport {
    let s = solution.diagnostics.state_norm_h2h1;
    match exact {
        None => AprioriReport {
            applicable: false,
            m_h: f64::NAN,
            state_norm: s,
            diff_norm: f64::NAN,
            norm_bound_ok: true,
            diff_bound_ok: true,
        },
        Some(ex) => {
            let m = state_norm_h2h1(ex);
            let d = state_norm_h2h1(&solution.state.sub(ex));
            let lim = (1.0 + APRIORI_TAU) * m;
            AprioriReport {
                applicable: true,
                m_h: m,
                state_norm: s,
                diff_norm: d,
                norm_bound_ok: s <= lim,
                diff_bound_ok: d <= lim,
            }
        }
    }
}
