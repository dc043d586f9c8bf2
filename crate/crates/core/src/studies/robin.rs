//! Robin coefficient stability on the annulus rim.
//!
//! A base Stokes flow `z₁` is driven by Dirichlet data on the outer boundary
//! with `σn + α₁v = 0` on the rim; `z₂` uses `α₂ = α₁ + tμ`. The difference
//! `v = z₁ − z₂` is compared against the coefficient gap on a rim run `𝒦`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use super::convergence::pool;
use super::report::*;
use crate::error::{Error, Result};
use crate::fields::norms::{boundary_l2, boundary_l2_on, boundary_norm, norm_h1, norm_l2, state_norm_h2h1};
use crate::fields::ops::{traction, velocity_gradient};
use crate::fields::{BoundaryField, OseenCoefficients, StokesState, VectorField};
use crate::kv::ForwardSolver;
use crate::mesh::{boundary_run, DomainKind, Grid, SubdomainWindow, GAMMA_0, GAMMA_OBS};

/// Relative refinement tolerance of the intermediate-bound constant.
pub const REFINE_TOL: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct RobinConfig {
    pub grid: Arc<Grid>,
    pub alpha1: BoundaryField,
    pub mu: BoundaryField,
    pub kappa: SubdomainWindow,
    pub kappa_run: (f64, f64),
    pub obs: String,
}

impl RobinConfig {
    /// Constant `α₁` and `μ` with `𝒦` the rim run between two arclength fractions.
    pub fn uniform(grid: &Arc<Grid>, alpha1: f64, mu: f64, kappa_run: (f64, f64)) -> Result<Self> {
        if grid.kind != DomainKind::SquareAnnulus {
            return Err(Error::WrongDomainKind);
        }
        let rim = grid.segment(GAMMA_0)?.clone();
        let m = rim.len();
        Ok(RobinConfig {
            grid: grid.clone(),
            alpha1: BoundaryField::scalar(rim.clone(), vec![alpha1; m]),
            mu: BoundaryField::scalar(rim.clone(), vec![mu; m]),
            kappa: boundary_run(&rim, kappa_run.0, kappa_run.1)?,
            kappa_run,
            obs: GAMMA_OBS.to_string(),
        })
    }

    /// Same coefficients on another grid.
    pub fn on_grid(&self, grid: &Arc<Grid>) -> Result<Self> {
        let a = self.alpha1.comps[0][0];
        let mu = self.mu.comps[0][0];
        Self::uniform(grid, a, mu, self.kappa_run)
    }
}

/// Lowest two Fourier modes of the outer arclength.
pub fn drive(grid: &Grid) -> Result<BoundaryField> {
    let seg = grid.segment(GAMMA_OBS)?;
    let len = seg.length();
    let (x, y): (Vec<f64>, Vec<f64>) = (0..seg.len())
        .map(|k| {
            let a = 2.0 * PI * seg.arclength(k) / len;
            (a.cos(), a.sin())
        })
        .unzip();
    Ok(BoundaryField::vector(seg.clone(), x, y))
}

fn robin_state(cfg: &RobinConfig, alpha: &BoundaryField) -> Result<StokesState> {
    let grid = &cfg.grid;
    let coeffs = OseenCoefficients::stokes(grid, 1.0);
    let outer = grid.segment(&cfg.obs)?.clone();
    let rim = grid.segment(GAMMA_0)?.clone();
    let solver = ForwardSolver::build(grid, &coeffs, outer, rim.clone(), Some(&alpha.comps[0]))?;
    Ok(solver.solve(&VectorField::zeros(grid), &drive(grid)?, &BoundaryField::zeros_vector(&rim)))
}

fn speed_on(s: &StokesState, run: &SubdomainWindow) -> Vec<f64> {
    run.node_ids.iter().map(|&k| s.v.x.values[k].hypot(s.v.y.values[k])).collect()
}

/// `min over 𝒦 of max(|z₁|, |z₂|)`.
pub fn lower_bound_m(z1: &StokesState, z2: &StokesState, kappa: &SubdomainWindow) -> f64 {
    speed_on(z1, kappa)
        .iter()
        .zip(speed_on(z2, kappa))
        .map(|(a, b)| a.max(b))
        .fold(f64::INFINITY, f64::min)
}

/// `‖v‖_{L²(Γ₀)} + ‖∇v‖_{L²(Γ₀)} + ‖q‖_{L²(Γ₀)}`, returned by part.
pub fn rim_trace_norms(d: &StokesState, rim: &Arc<crate::mesh::BoundarySegment>) -> [f64; 3] {
    let g = velocity_gradient(&d.v);
    let pick = |v: &[f64]| rim.node_ids.iter().map(|&k| v[k]).collect::<Vec<f64>>();
    let grad = BoundaryField {
        segment: rim.clone(),
        comps: vec![pick(&g.c[0][0]), pick(&g.c[0][1]), pick(&g.c[1][0]), pick(&g.c[1][1])],
    };
    [
        boundary_l2(&BoundaryField::trace(&d.v, rim)),
        boundary_l2(&grad),
        boundary_l2(&BoundaryField::scalar(rim.clone(), pick(&d.p.values))),
    ]
}

/// `M/ln(1+M/G)^{1/4}`, zero when `M = 0`.
pub fn robin_rhs(m: f64, g: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    m / (1.0 + m / g).ln().powf(0.25)
}

fn robin_row(cfg: &RobinConfig, z1: &StokesState, t: f64) -> Result<StudyRow> {
    let grid = &cfg.grid;
    let alpha2 = cfg.alpha1.add(&cfg.mu.scale(t));
    let z2 = robin_state(cfg, &alpha2)?;
    let d = z1.sub(&z2);
    let outer = grid.segment(&cfg.obs)?;
    let rim = grid.segment(GAMMA_0)?;
    let a = boundary_l2_on(&cfg.alpha1.sub(&alpha2), &cfg.kappa);
    let g = boundary_norm(&BoundaryField::trace(&d.v, outer), 1.5)? + boundary_norm(&traction(&d, 1.0, outer), 0.5)?;
    let m = state_norm_h2h1(&d);
    let parts = rim_trace_norms(&d, rim);
    let mut r = StudyRow::new(t);
    r.error_v_l2 = norm_l2(&d.v);
    r.error_v_h1 = norm_h1(&d.v);
    r.error_p_l2 = norm_l2(&d.p);
    r.obs_quantity = g;
    r.bound_value = robin_rhs(m, g);
    r.label = format!("n={}", grid.n);
    r.set("n", grid.n as f64);
    r.set("A", a);
    r.set("G", g);
    r.set("M", m);
    r.set("m", lower_bound_m(z1, &z2, &cfg.kappa));
    r.set("trace_v", parts[0]);
    r.set("trace_grad_v", parts[1]);
    r.set("trace_q", parts[2]);
    r.set("trace42", parts.iter().sum());
    Ok(r)
}

fn ratio(num: f64, m: f64, den: f64) -> f64 {
    num * m / den
}

/// Recomputes the Robin flags from the rows.
pub fn finalize_robin(rows: &[StudyRow], constants: &mut BTreeMap<String, f64>) -> BTreeMap<String, bool> {
    let mut flags = BTreeMap::new();
    let mut levels: Vec<f64> = rows.iter().map(|r| r.get("n")).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut c42 = Vec::new();
    for &n in &levels {
        let mut sub: Vec<&StudyRow> = rows.iter().filter(|r| r.get("n") == n).collect();
        sub.sort_by(|a, b| a.param.total_cmp(&b.param));
        let tag = format!("n{}", n as usize);
        let control = sub.iter().find(|r| r.param == 0.0);
        if let Some(c) = control {
            flags.insert(format!("control_{tag}"), c.get("A") == 0.0 && c.get("G") <= 1e-12);
        }
        let live: Vec<&&StudyRow> = sub.iter().filter(|r| r.param > 0.0).collect();
        let inc = |k: &str| sub.windows(2).all(|w| w[1].get(k) > w[0].get(k));
        flags.insert(format!("monotone_{tag}"), inc("A") && inc("G"));
        let r42: Vec<f64> = live.iter().map(|r| ratio(r.get("A"), r.get("m"), r.get("trace42"))).collect();
        let r19: Vec<f64> = live.iter().map(|r| ratio(r.get("A"), r.get("m"), r.bound_value)).collect();
        let c = r42.iter().copied().fold(0.0, f64::max);
        constants.insert(format!("C_fit_42_{tag}"), c);
        constants.insert(format!("C_fit_19_{tag}"), r19.iter().copied().fold(0.0, f64::max));
        flags.insert(format!("band_42_{tag}"), band_ok(&r42));
        flags.insert(format!("band_19_{tag}"), band_ok(&r19));
        c42.push(c);
    }
    if c42.len() >= 2 {
        let change = c42[c42.len() - 1] / c42[0] - 1.0;
        constants.insert("C_fit_42_refinement_change".into(), change);
        flags.insert("refinement_42".into(), change.abs() <= REFINE_TOL);
    }
    flags
}

/// Runs the t-sweep on every grid in `grids` (same coefficients).
pub fn run_robin_study(cfg: &RobinConfig, grids: &[Arc<Grid>], t_list: &[f64], threads: usize) -> Result<StudyReport> {
    if let Some(t) = t_list.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::EpsListInvalid(format!("t = {t} is negative")));
    }
    let mut ts = t_list.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut rep = StudyReport::new(StudyKind::Robin);
    rep.echo("alpha1", cfg.alpha1.comps[0][0]);
    rep.echo("mu", cfg.mu.comps[0][0]);
    rep.echo("kappa_run", format!("{},{}", cfg.kappa_run.0, cfg.kappa_run.1));
    rep.echo("t", ts.iter().map(|t| format!("{t:e}")).collect::<Vec<_>>().join(","));
    rep.echo("n", grids.iter().map(|g| g.n.to_string()).collect::<Vec<_>>().join(","));
    let pool = pool(threads);
    for grid in grids {
        let c = cfg.on_grid(grid)?;
        let z1 = robin_state(&c, &c.alpha1)?;
        let speed = speed_on(&z1, &c.kappa);
        let m = speed.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = z1.v.max_abs();
        if !(m > 1e-12 * scale.max(1.0)) {
            return Err(Error::MDegenerate(m));
        }
        rep.constants.insert(format!("m_base_n{}", grid.n), m);
        let rows = pool.install(|| ts.par_iter().map(|&t| robin_row(&c, &z1, t)).collect::<Result<Vec<_>>>())?;
        rep.rows.extend(rows);
    }
    rep.flags = finalize_robin(&rep.rows, &mut rep.constants);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_limits() {
        assert_eq!(robin_rhs(0.0, 0.0), 0.0);
        let r = robin_rhs(2.0, 1.0);
        assert!((r - 2.0 / 3f64.ln().powf(0.25)).abs() < 1e-15);
    }
}
