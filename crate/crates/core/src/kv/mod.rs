//! Penalized Kohn-Vogelius method on the square annulus.
//!
//! The φ-problem carries Dirichlet data `g_D` on the outer boundary and a
//! traction guess `φ_N` on the inner rim; the ψ-problem carries traction `g_N`
//! outside and a Dirichlet guess `ψ_D` on the rim. The functional
//! `F = |v_φ − v_ψ|²_{H¹} + |v_φ − v_ψ|²_{H²}` plus `ε` times both state norms
//! is quadratic in `(φ_N, ψ_D)` and minimized in that reduced space.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::norms::{boundary_norm, h1_semi_sq, h2_semi_sq, state_norm_h2h1_sq};
use crate::fields::ops::traction;
use crate::fields::{BoundaryField, OseenCoefficients, ScalarField, StokesState, VectorField};
use crate::linalg::{LeastSquaresTerm, SolveMethod, SolveReport, SparseMatrix};
use crate::mesh::{BoundarySegment, DomainKind, Grid, GAMMA_C, GAMMA_OBS};
use crate::qr::system::{FactoredSystem, UnknownMap};
use crate::qr::{beta_n, terms, CauchyProblem};

/// Which boundary of the annulus carries Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    /// Dirichlet outside, traction on the rim.
    Phi,
    /// Traction outside, Dirichlet on the rim.
    Psi,
}

/// Factored mixed Dirichlet/traction Stokes-Oseen solver.
#[derive(Debug, Clone)]
pub struct ForwardSolver {
    grid: Arc<Grid>,
    dirichlet: Arc<BoundarySegment>,
    traction_seg: Arc<BoundarySegment>,
    system: FactoredSystem,
    fixed: Vec<usize>,
}

impl ForwardSolver {
    fn new(grid: &Arc<Grid>, coeffs: &OseenCoefficients, variant: Variant) -> Result<Self> {
        if grid.kind != DomainKind::SquareAnnulus {
            return Err(Error::WrongDomainKind);
        }
        let outer = grid.segment(GAMMA_OBS)?.clone();
        let inner = grid.segment(GAMMA_C)?.clone();
        let (dirichlet, traction_seg) = match variant {
            Variant::Phi => (outer, inner),
            Variant::Psi => (inner, outer),
        };
        Self::build(grid, coeffs, dirichlet, traction_seg, None)
    }

    /// Dirichlet on `dirichlet`, `σn + αv` penalized on `traction_seg`.
    pub fn build(
        grid: &Arc<Grid>,
        coeffs: &OseenCoefficients,
        dirichlet: Arc<BoundarySegment>,
        traction_seg: Arc<BoundarySegment>,
        alpha: Option<&[f64]>,
    ) -> Result<Self> {
        let zero_f = VectorField::zeros(grid);
        let zero_d = ScalarField::zeros(grid);
        let mut t = terms::pde_terms(grid, coeffs, &zero_f, &zero_d);
        t.push(LeastSquaresTerm::new(
            "traction",
            terms::traction(grid, &traction_seg, coeffs.nu, alpha),
            vec![0.0; 2 * traction_seg.len()],
            beta_n(grid),
        ));
        let fixed = terms::velocity_indices(&dirichlet);
        let map = UnknownMap::new(3 * grid.node_count(), &fixed, &vec![0.0; fixed.len()]);
        let system = FactoredSystem::new(&t, map).map_err(|e| match e {
            Error::NotPositiveDefinite { pivot, .. } => Error::SingularSystem(pivot),
            e => e,
        })?;
        Ok(ForwardSolver { grid: grid.clone(), dirichlet, traction_seg, system, fixed })
    }

    pub fn unknowns(&self) -> usize {
        self.system.map.n_free()
    }

    /// Full state vector for forcing `f`, Dirichlet values and traction values.
    pub fn solve_vector(&self, f: &VectorField, dirichlet: &BoundaryField, traction: &BoundaryField) -> Vec<f64> {
        let grid = &self.grid;
        let zero_d = ScalarField::zeros(grid);
        let tm = terms::momentum_target(grid, f);
        let td = terms::divergence_target(grid, &zero_d);
        let tg = terms::grad_div_target(grid, &zero_d);
        let ts = vec![0.0; grid.node_count()];
        let tt = terms::boundary_target(&self.traction_seg, &traction.comps);
        let fixed = self.system.map.with_values(&self.fixed, &terms::velocity_values(&dirichlet.comps)).fixed_values;
        self.system.solve(&[&tm, &td, &tg, &ts, &tt], &fixed)
    }

    pub fn solve(&self, f: &VectorField, dirichlet: &BoundaryField, traction: &BoundaryField) -> StokesState {
        StokesState::from_vector(&self.grid, &self.solve_vector(f, dirichlet, traction))
    }

    pub fn dirichlet_segment(&self) -> &Arc<BoundarySegment> {
        &self.dirichlet
    }

    pub fn traction_segment(&self) -> &Arc<BoundarySegment> {
        &self.traction_seg
    }
}

/// Dirichlet `g_D` on the outer boundary, traction `φ_N` on the rim.
pub fn solve_forward_phi(
    grid: &Arc<Grid>,
    coeffs: &OseenCoefficients,
    f: &VectorField,
    g_d: &BoundaryField,
    phi_n: &BoundaryField,
) -> Result<StokesState> {
    Ok(ForwardSolver::new(grid, coeffs, Variant::Phi)?.solve(f, g_d, phi_n))
}

/// Traction `g_N` on the outer boundary, Dirichlet `ψ_D` on the rim.
pub fn solve_forward_psi(
    grid: &Arc<Grid>,
    coeffs: &OseenCoefficients,
    f: &VectorField,
    g_n: &BoundaryField,
    psi_d: &BoundaryField,
) -> Result<StokesState> {
    Ok(ForwardSolver::new(grid, coeffs, Variant::Psi)?.solve(f, psi_d, g_n))
}

/// Traction guess and Dirichlet guess on the inner rim.
#[derive(Debug, Clone, PartialEq)]
pub struct KvUnknown {
    pub phi_n: BoundaryField,
    pub psi_d: BoundaryField,
}

impl KvUnknown {
    pub fn zeros(rim: &Arc<BoundarySegment>) -> Self {
        KvUnknown { phi_n: BoundaryField::zeros_vector(rim), psi_d: BoundaryField::zeros_vector(rim) }
    }

    /// `[φ₁, φ₂, ψ₁, ψ₂]`, length `4·|Γ_c|`.
    pub fn stacked(&self) -> Vec<f64> {
        [self.phi_n.stacked(), self.psi_d.stacked()].concat()
    }

    pub fn from_stacked(rim: &Arc<BoundarySegment>, u: &[f64]) -> Self {
        let h = u.len() / 2;
        KvUnknown { phi_n: BoundaryField::from_stacked(rim, &u[..h]), psi_d: BoundaryField::from_stacked(rim, &u[h..]) }
    }

    /// Traction and trace of `state` on the rim.
    pub fn of_state(state: &StokesState, nu: f64, rim: &Arc<BoundarySegment>) -> Self {
        KvUnknown { phi_n: traction(state, nu, rim), psi_d: BoundaryField::trace(&state.v, rim) }
    }
}

#[derive(Debug, Clone)]
pub struct KvSolution {
    pub epsilon: f64,
    pub unknown: KvUnknown,
    pub state_phi: StokesState,
    pub state_psi: StokesState,
    /// `(v_φ, p_ψ)`.
    pub state: StokesState,
    /// `(v_ψ, p_φ)`.
    pub alt_state: StokesState,
    pub f_value: f64,
    pub f_eps_value: f64,
    pub gap_h1: f64,
    pub gap_h2: f64,
    pub norm_phi_state: f64,
    pub norm_psi_state: f64,
    pub traction_gap_h12: f64,
    pub reduced_dim: usize,
    /// Smallest eigenvalue of the reduced Hessian of `F_ε`.
    pub hessian_min_eig: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct KvSummary {
    pub epsilon: f64,
    pub F_value: f64,
    pub F_eps_value: f64,
    pub gap_h1: f64,
    pub gap_h2: f64,
    pub norm_phi_state: f64,
    pub norm_psi_state: f64,
    pub traction_gap_h12: f64,
    pub reduced_dim: usize,
    pub wall_ms: f64,
}

impl KvSolution {
    pub fn summary(&self) -> KvSummary {
        KvSummary {
            epsilon: self.epsilon,
            F_value: self.f_value,
            F_eps_value: self.f_eps_value,
            gap_h1: self.gap_h1,
            gap_h2: self.gap_h2,
            norm_phi_state: self.norm_phi_state,
            norm_psi_state: self.norm_psi_state,
            traction_gap_h12: self.traction_gap_h12,
            reduced_dim: self.reduced_dim,
            wall_ms: self.report.wall_ms,
        }
    }
}

fn check_kv_problem(problem: &CauchyProblem) -> Result<(&BoundaryField, &BoundaryField)> {
    if problem.grid.kind != DomainKind::SquareAnnulus || problem.obs.name != GAMMA_OBS {
        return Err(Error::WrongDomainKind);
    }
    if problem.d.max_abs() != 0.0 {
        return Err(Error::NonzeroDivergenceData);
    }
    match (&problem.g_d, &problem.g_n) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::MissingBoundaryData),
    }
}

/// `(F, F_ε)` by two fresh forward solves.
pub fn kv_value(unknown: &KvUnknown, problem: &CauchyProblem, eps: f64) -> Result<(f64, f64)> {
    let (gd, gn) = check_kv_problem(problem)?;
    let grid = &problem.grid;
    let sphi = solve_forward_phi(grid, &problem.coeffs, &problem.f, gd, &unknown.phi_n)?;
    let spsi = solve_forward_psi(grid, &problem.coeffs, &problem.f, gn, &unknown.psi_d)?;
    Ok(functional(&sphi, &spsi, eps))
}

fn functional(sphi: &StokesState, spsi: &StokesState, eps: f64) -> (f64, f64) {
    let gap = sphi.v.sub(&spsi.v);
    let f = h1_semi_sq(&gap) + h2_semi_sq(&gap);
    (f, f + eps * (state_norm_h2h1_sq(sphi) + state_norm_h2h1_sq(spsi)))
}

/// Affine reduced model of `F_ε` in the stacked rim unknown.
pub struct KvModel {
    problem: CauchyProblem,
    rim: Arc<BoundarySegment>,
    phi: ForwardSolver,
    psi: ForwardSolver,
    /// Responses: `x_φ(u) = a_phi + Σ u_j phi_cols[j]`, likewise for ψ.
    a_phi: Vec<f64>,
    a_psi: Vec<f64>,
    phi_cols: Vec<Vec<f64>>,
    psi_cols: Vec<Vec<f64>>,
    /// Triangular factors of `[S[Φ,−Ψ] | S(a_φ−a_ψ)]`, `[FΦ | F a_φ]`, `[FΨ | F a_ψ]`.
    r_gap: DMatrix<f64>,
    r_phi: DMatrix<f64>,
    r_psi: DMatrix<f64>,
    setup_ms: f64,
}

fn triangular_factor(cols: &[Vec<f64>], rows: usize) -> DMatrix<f64> {
    let k = cols.len();
    let m = DMatrix::from_fn(rows, k, |i, j| cols[j][i]);
    let r = m.qr().r();
    // Pad when the block has fewer rows than columns.
    let mut out = DMatrix::zeros(k, k);
    let n = r.nrows().min(k);
    out.view_mut((0, 0), (n, k)).copy_from(&r.rows(0, n));
    out
}

impl KvModel {
    pub fn new(problem: &CauchyProblem) -> Result<Self> {
        let (gd, gn) = check_kv_problem(problem)?;
        let start = Instant::now();
        let grid = &problem.grid;
        let rim = grid.segment(GAMMA_C)?.clone();
        let phi = ForwardSolver::new(grid, &problem.coeffs, Variant::Phi)?;
        let psi = ForwardSolver::new(grid, &problem.coeffs, Variant::Psi)?;
        let zero_rim = BoundaryField::zeros_vector(&rim);
        let zero_out = BoundaryField::zeros_vector(&problem.obs);
        let zero_f = VectorField::zeros(grid);
        let a_phi = phi.solve_vector(&problem.f, gd, &zero_rim);
        let a_psi = psi.solve_vector(&problem.f, &zero_rim, gn);
        let m2 = 2 * rim.len();
        let unit = |j: usize| {
            let mut e = vec![0.0; m2];
            e[j] = 1.0;
            BoundaryField::from_stacked(&rim, &e)
        };
        let phi_cols: Vec<Vec<f64>> = (0..m2).map(|j| phi.solve_vector(&zero_f, &zero_out, &unit(j))).collect();
        let psi_cols: Vec<Vec<f64>> = (0..m2).map(|j| psi.solve_vector(&zero_f, &unit(j), &zero_out)).collect();

        let s = terms::velocity_seminorms(grid);
        let g = terms::regularization(grid);
        let mut gap_cols: Vec<Vec<f64>> = phi_cols.iter().map(|c| s.mul_vec(c)).collect();
        gap_cols.extend(psi_cols.iter().map(|c| s.mul_vec(c).iter().map(|v| -v).collect()));
        let diff: Vec<f64> = a_phi.iter().zip(&a_psi).map(|(a, b)| a - b).collect();
        gap_cols.push(s.mul_vec(&diff));
        let r_gap = triangular_factor(&gap_cols, s.nrows());
        let block = |cols: &[Vec<f64>], a: &[f64], g: &SparseMatrix| {
            let mut c: Vec<Vec<f64>> = cols.iter().map(|c| g.mul_vec(c)).collect();
            c.push(g.mul_vec(a));
            triangular_factor(&c, g.nrows())
        };
        let r_phi = block(&phi_cols, &a_phi, &g);
        let r_psi = block(&psi_cols, &a_psi, &g);
        Ok(KvModel {
            problem: problem.clone(),
            rim,
            phi,
            psi,
            a_phi,
            a_psi,
            phi_cols,
            psi_cols,
            r_gap,
            r_phi,
            r_psi,
            setup_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn reduced_dim(&self) -> usize {
        2 * self.phi_cols.len()
    }

    pub fn rim(&self) -> &Arc<BoundarySegment> {
        &self.rim
    }

    pub fn forward_solvers(&self) -> (&ForwardSolver, &ForwardSolver) {
        (&self.phi, &self.psi)
    }

    /// Upper-triangular `R̃` with `F_ε(u) = ‖R̃ [u; 1]‖²`.
    fn stacked_factor(&self, eps: f64) -> DMatrix<f64> {
        let k = self.reduced_dim();
        let h = k / 2;
        let se = eps.sqrt();
        let mut m = DMatrix::zeros(3 * (k + 1), k + 1);
        m.view_mut((0, 0), (k + 1, k + 1)).copy_from(&self.r_gap);
        for i in 0..=h {
            for j in 0..h {
                m[(k + 1 + i, j)] = se * self.r_phi[(i, j)];
                m[(2 * (k + 1) + i, h + j)] = se * self.r_psi[(i, j)];
            }
            m[(k + 1 + i, k)] = se * self.r_phi[(i, h)];
            m[(2 * (k + 1) + i, k)] = se * self.r_psi[(i, h)];
        }
        m.qr().r()
    }

    /// Reduced-model value of `F_ε`.
    pub fn model_value(&self, u: &[f64], eps: f64) -> f64 {
        let r = self.stacked_factor(eps);
        let mut z = DVector::from_column_slice(u).push(1.0);
        z = &r * z;
        z.norm_squared()
    }

    /// Reduced-model gradient of `F_ε`.
    pub fn model_gradient(&self, u: &[f64], eps: f64) -> Vec<f64> {
        let r = self.stacked_factor(eps);
        let k = self.reduced_dim();
        let z = &r * DVector::from_column_slice(u).push(1.0);
        let g = r.columns(0, k).transpose() * z * 2.0;
        g.iter().copied().collect()
    }

    pub fn states(&self, u: &[f64]) -> (StokesState, StokesState) {
        let h = self.phi_cols.len();
        let combine = |a: &[f64], cols: &[Vec<f64>], c: &[f64]| {
            let mut x = a.to_vec();
            for (col, &cj) in cols.iter().zip(c) {
                if cj != 0.0 {
                    for (xi, v) in x.iter_mut().zip(col) {
                        *xi += cj * v;
                    }
                }
            }
            x
        };
        let grid = &self.problem.grid;
        (
            StokesState::from_vector(grid, &combine(&self.a_phi, &self.phi_cols, &u[..h])),
            StokesState::from_vector(grid, &combine(&self.a_psi, &self.psi_cols, &u[h..])),
        )
    }

    /// Forward states for `unknown` by direct solves with the cached factors.
    pub fn direct_states(&self, unknown: &KvUnknown) -> Result<(StokesState, StokesState)> {
        let (gd, gn) = check_kv_problem(&self.problem)?;
        let f = &self.problem.f;
        Ok((self.phi.solve(f, gd, &unknown.phi_n), self.psi.solve(f, &unknown.psi_d, gn)))
    }

    /// `(F, F_ε)` from [`KvModel::direct_states`], bypassing the affine model.
    pub fn direct_value(&self, unknown: &KvUnknown, eps: f64) -> Result<(f64, f64)> {
        let (sphi, spsi) = self.direct_states(unknown)?;
        Ok(functional(&sphi, &spsi, eps))
    }

    pub fn problem(&self) -> &CauchyProblem {
        &self.problem
    }

    pub fn minimize(&self, eps: f64) -> Result<KvSolution> {
        if !(eps > 0.0) {
            return Err(Error::EpsilonNonpositive(eps));
        }
        let start = Instant::now();
        let k = self.reduced_dim();
        let r = self.stacked_factor(eps);
        let r11 = r.view((0, 0), (k, k)).clone_owned();
        let r12 = r.view((0, k), (k, 1)).clone_owned();
        let sv = r11.clone().singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin > 0.0) {
            return Err(Error::ReducedSystemNotPd);
        }
        let u = r11.solve_upper_triangular(&(-r12)).ok_or(Error::ReducedSystemNotPd)?;
        let u: Vec<f64> = u.iter().copied().collect();
        let (sphi, spsi) = self.states(&u);
        let gap = sphi.v.sub(&spsi.v);
        let (gh1, gh2) = (h1_semi_sq(&gap), h2_semi_sq(&gap));
        let (nphi, npsi) = (state_norm_h2h1_sq(&sphi), state_norm_h2h1_sq(&spsi));
        let state = StokesState::new(sphi.v.clone(), spsi.p.clone());
        let alt_state = StokesState::new(spsi.v.clone(), sphi.p.clone());
        let gn = self.problem.g_n.as_ref().expect("checked");
        let tg = boundary_norm(&traction(&state, self.problem.coeffs.nu, &self.problem.obs).sub(gn), 0.5)?;
        let model_min = r[(k, k)] * r[(k, k)];
        let f_eps = gh1 + gh2 + eps * (nphi + npsi);
        let wall_ms = self.setup_ms + start.elapsed().as_secs_f64() * 1e3;
        Ok(KvSolution {
            epsilon: eps,
            unknown: KvUnknown::from_stacked(&self.rim, &u),
            state,
            alt_state,
            f_value: gh1 + gh2,
            f_eps_value: f_eps,
            gap_h1: gh1.sqrt(),
            gap_h2: gh2.sqrt(),
            norm_phi_state: nphi.sqrt(),
            norm_psi_state: npsi.sqrt(),
            traction_gap_h12: tg,
            reduced_dim: k,
            hessian_min_eig: 2.0 * smin * smin,
            report: SolveReport {
                method: SolveMethod::Cholesky,
                iterations: 0,
                relative_residual: if f_eps > 0.0 { (f_eps - model_min).abs() / f_eps } else { model_min.abs() },
                wall_ms,
            },
            state_phi: sphi,
            state_psi: spsi,
        })
    }
}

pub fn minimize_kv(problem: &CauchyProblem, eps: f64) -> Result<KvSolution> {
    if !(eps > 0.0) {
        return Err(Error::EpsilonNonpositive(eps));
    }
    KvModel::new(problem)?.minimize(eps)
}

/// Relative gap between the reduced-model directional derivative of `F_ε` and
/// a central difference of [`kv_value`].
pub fn kv_gradient_check(problem: &CauchyProblem, eps: f64, unknown: &KvUnknown, direction: &[f64]) -> Result<f64> {
    let dn = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dn == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let model = KvModel::new(problem)?;
    gradient_check_with(&model, eps, unknown, direction)
}

pub fn gradient_check_with(model: &KvModel, eps: f64, unknown: &KvUnknown, direction: &[f64]) -> Result<f64> {
    let dn = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dn == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let u = unknown.stacked();
    let un = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tau = (1.0 + un) / dn;
    let g = model.model_gradient(&u, eps);
    let dd: f64 = g.iter().zip(direction).map(|(a, b)| a * b).sum();
    let shifted = |s: f64| -> Result<f64> {
        let w: Vec<f64> = u.iter().zip(direction).map(|(a, b)| a + s * b).collect();
        Ok(model.direct_value(&KvUnknown::from_stacked(&model.rim, &w), eps)?.1)
    };
    let fd = (shifted(tau)? - shifted(-tau)?) / (2.0 * tau);
    Ok((fd - dd).abs() / dd.abs().max(f64::MIN_POSITIVE))
}
