//! Closed-form Stokes/Oseen solutions and the data they induce.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::norms::{boundary_norm, norm_l2};
use crate::fields::ops::traction;
use crate::fields::spectral::spectrum_of;
use crate::fields::{BoundaryField, OseenCoefficients, ScalarField, StokesState, VectorField};
use crate::mesh::Grid;
use crate::qr::CauchyProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseName {
    Ms0,
    Ms1,
    Ms2,
    Ms3,
}

impl FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MS0" => Ok(CaseName::Ms0),
            "MS1" => Ok(CaseName::Ms1),
            "MS2" => Ok(CaseName::Ms2),
            "MS3" => Ok(CaseName::Ms3),
            _ => Err(Error::UnknownCase(s.to_string())),
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseName::Ms0 => "MS0",
            CaseName::Ms1 => "MS1",
            CaseName::Ms2 => "MS2",
            CaseName::Ms3 => "MS3",
        };
        f.write_str(s)
    }
}

type Mat2 = [[f64; 2]; 2];

/// A closed-form solution, optionally scaled by `scale` (coefficients stay fixed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub name: CaseName,
    pub nu: f64,
    pub scale: f64,
    /// Cases whose transport fields serve as `z₁` and `z₂`.
    pub z1_from: CaseName,
    pub z2_from: CaseName,
}

pub fn catalog(name: &str) -> Result<ManufacturedCase> {
    Ok(ManufacturedCase::new(name.parse()?))
}

// Stream-function velocity of MS2/MS3 and its derivatives.
fn trig_v(x: f64, y: f64) -> [f64; 2] {
    let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
    [PI * sx * cy, -PI * cx * sy]
}

fn trig_grad(x: f64, y: f64) -> Mat2 {
    let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
    let a = PI * PI * cx * cy;
    let b = PI * PI * sx * sy;
    [[a, -b], [b, -a]]
}

impl ManufacturedCase {
    pub fn new(name: CaseName) -> Self {
        ManufacturedCase { name, nu: 1.0, scale: 1.0, z1_from: name, z2_from: name }
    }

    /// Takes `z₁` from `z1_from` and `z₂` from `z2_from`; the forcing follows.
    pub fn with_coefficients(self, z1_from: CaseName, z2_from: CaseName) -> Self {
        ManufacturedCase { z1_from, z2_from, ..self }
    }

    pub fn with_viscosity(self, nu: f64) -> Self {
        ManufacturedCase { nu, ..self }
    }

    pub fn scaled(self, scale: f64) -> Self {
        ManufacturedCase { scale, ..self }
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let v = match self.name {
            CaseName::Ms0 => [0.0, 0.0],
            CaseName::Ms1 => [y, x],
            CaseName::Ms2 | CaseName::Ms3 => trig_v(x, y),
        };
        [self.scale * v[0], self.scale * v[1]]
    }

    /// `g[c][d] = ∂_d v_c`.
    pub fn velocity_gradient(&self, x: f64, y: f64) -> Mat2 {
        let g = match self.name {
            CaseName::Ms0 => [[0.0; 2]; 2],
            CaseName::Ms1 => [[0.0, 1.0], [1.0, 0.0]],
            CaseName::Ms2 | CaseName::Ms3 => trig_grad(x, y),
        };
        g.map(|r| r.map(|v| self.scale * v))
    }

    pub fn velocity_laplacian(&self, x: f64, y: f64) -> [f64; 2] {
        match self.name {
            CaseName::Ms0 | CaseName::Ms1 => [0.0, 0.0],
            CaseName::Ms2 | CaseName::Ms3 => {
                let v = self.velocity(x, y);
                [-2.0 * PI * PI * v[0], -2.0 * PI * PI * v[1]]
            }
        }
    }

    pub fn pressure(&self, x: f64, y: f64) -> f64 {
        self.scale
            * match self.name {
                CaseName::Ms0 => 0.0,
                CaseName::Ms1 => 1.0,
                CaseName::Ms2 | CaseName::Ms3 => (PI * x).cos() * (PI * y).cos(),
            }
    }

    pub fn pressure_gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let g = match self.name {
            CaseName::Ms0 | CaseName::Ms1 => [0.0, 0.0],
            CaseName::Ms2 | CaseName::Ms3 => {
                [-PI * (PI * x).sin() * (PI * y).cos(), -PI * (PI * x).cos() * (PI * y).sin()]
            }
        };
        [self.scale * g[0], self.scale * g[1]]
    }

    pub fn z1(&self, _x: f64, _y: f64) -> [f64; 2] {
        match self.z1_from {
            CaseName::Ms3 => [1.0, 0.0],
            _ => [0.0, 0.0],
        }
    }

    /// `z₂` is the unscaled MS2 velocity for MS3, so scaling keeps the operator fixed.
    pub fn z2(&self, x: f64, y: f64) -> [f64; 2] {
        match self.z2_from {
            CaseName::Ms3 => trig_v(x, y),
            _ => [0.0, 0.0],
        }
    }

    pub fn z2_gradient(&self, x: f64, y: f64) -> Mat2 {
        match self.z2_from {
            CaseName::Ms3 => trig_grad(x, y),
            _ => [[0.0; 2]; 2],
        }
    }

    /// `f = −νΔv + (z₁·∇)v + (v·∇)z₂ + ∇p`.
    pub fn forcing(&self, x: f64, y: f64) -> [f64; 2] {
        let lap = self.velocity_laplacian(x, y);
        let gv = self.velocity_gradient(x, y);
        let gz = self.z2_gradient(x, y);
        let v = self.velocity(x, y);
        let z1 = self.z1(x, y);
        let gp = self.pressure_gradient(x, y);
        let mut f = [0.0; 2];
        for c in 0..2 {
            f[c] = -self.nu * lap[c]
                + z1[0] * gv[c][0]
                + z1[1] * gv[c][1]
                + v[0] * gz[c][0]
                + v[1] * gz[c][1]
                + gp[c];
        }
        f
    }

    /// `σ(v,p)n` at a point with outward normal `n`.
    pub fn traction(&self, x: f64, y: f64, n: [f64; 2]) -> [f64; 2] {
        let g = self.velocity_gradient(x, y);
        let p = self.pressure(x, y);
        let mut t = [0.0; 2];
        for c in 0..2 {
            t[c] = -p * n[c];
            for d in 0..2 {
                t[c] += self.nu * (g[c][d] + g[d][c]) * n[d];
            }
        }
        t
    }

    pub fn exact_state(&self, grid: &Arc<Grid>) -> StokesState {
        StokesState::new(
            VectorField::from_fn(grid, |x, y| self.velocity(x, y)),
            ScalarField::from_fn(grid, |x, y| self.pressure(x, y)),
        )
    }

    pub fn coefficients(&self, grid: &Arc<Grid>) -> OseenCoefficients {
        OseenCoefficients::new(
            self.nu,
            VectorField::from_fn(grid, |x, y| self.z1(x, y)),
            VectorField::from_fn(grid, |x, y| self.z2(x, y)),
        )
    }

    pub fn forcing_field(&self, grid: &Arc<Grid>) -> VectorField {
        VectorField::from_fn(grid, |x, y| self.forcing(x, y))
    }

    pub fn trace_on(&self, grid: &Grid, segment: &Arc<crate::mesh::BoundarySegment>) -> BoundaryField {
        BoundaryField::from_fn(segment, grid, |x, y, _| self.velocity(x, y))
    }

    pub fn traction_on(&self, grid: &Grid, segment: &Arc<crate::mesh::BoundarySegment>) -> BoundaryField {
        BoundaryField::from_fn(segment, grid, |x, y, n| self.traction(x, y, n))
    }
}

/// Compatible Cauchy data of `case` on the named segment.
pub fn make_cauchy_data(case: &ManufacturedCase, grid: &Arc<Grid>, segment: &str) -> Result<CauchyProblem> {
    let seg = grid.segment(segment)?.clone();
    Ok(CauchyProblem {
        grid: grid.clone(),
        coeffs: case.coefficients(grid),
        f: case.forcing_field(grid),
        d: ScalarField::zeros(grid),
        g_d: Some(case.trace_on(grid, &seg)),
        g_n: Some(case.traction_on(grid, &seg)),
        obs: seg,
        interior: None,
    })
}

/// `g_D` and `f` from `a`, `g_N` from `b`: Cauchy data without a common solution.
pub fn make_incompatible_data(
    a: &ManufacturedCase,
    b: &ManufacturedCase,
    grid: &Arc<Grid>,
    segment: &str,
) -> Result<CauchyProblem> {
    if a == b {
        return Err(Error::CasesIdentical);
    }
    let mut p = make_cauchy_data(a, grid, segment)?;
    p.g_n = Some(b.traction_on(grid, &p.obs));
    Ok(p)
}

/// Discrete traction of the sampled exact state; differs from the analytic
/// traction by the one-sided stencil error.
pub fn discrete_traction(case: &ManufacturedCase, grid: &Arc<Grid>, segment: &str) -> Result<BoundaryField> {
    let seg = grid.segment(segment)?;
    Ok(traction(&case.exact_state(grid), case.nu, seg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseTarget {
    F,
    GD,
    GN,
}

impl NoiseTarget {
    fn salt(self) -> u64 {
        match self {
            NoiseTarget::F => 0x9e37_79b9_7f4a_7c15,
            NoiseTarget::GD => 0xbf58_476d_1ce4_e5b9,
            NoiseTarget::GN => 0x94d0_49bb_1331_11eb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub delta: f64,
    pub seed: u64,
    pub targets: Vec<NoiseTarget>,
}

/// Number of boundary eigenmodes carrying noise.
pub const NOISE_MODES: usize = 8;

fn boundary_noise(g: &BoundaryField, delta: f64, order: f64, rng: &mut ChaCha8Rng) -> BoundaryField {
    let sp = spectrum_of(&g.segment);
    let modes = NOISE_MODES.min(sp.basis.len());
    let m = g.len();
    let mut comps = Vec::new();
    for _ in 0..2 {
        let mut c = vec![0.0; m];
        for e in &sp.basis[..modes] {
            let a: f64 = rng.random_range(-1.0..1.0);
            for i in 0..m {
                c[i] += a * e[i];
            }
        }
        comps.push(c);
    }
    let noise = BoundaryField::vector(g.segment.clone(), comps[0].clone(), comps[1].clone());
    let norm = boundary_norm(&noise, order).expect("supported order");
    g.add(&noise.scale(delta / norm))
}

fn volume_noise(f: &VectorField, delta: f64, rng: &mut ChaCha8Rng) -> VectorField {
    let grid = f.grid();
    let mut comps = Vec::new();
    for _ in 0..2 {
        let coef: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        comps.push(ScalarField::from_fn(grid, |x, y| {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += coef[3 * k + l] * (k as f64 * PI * x).cos() * (l as f64 * PI * y).cos();
                }
            }
            s
        }));
    }
    let noise = VectorField::new(comps[0].clone(), comps[1].clone());
    let norm = norm_l2(&noise);
    f.add(&noise.scale(delta / norm))
}

/// Adds smooth seeded noise of exact size `δ` (L² for `f`, H^{3/2} for `g_D`,
/// H^{1/2} for `g_N`). `δ = 0` returns the problem unchanged.
pub fn perturb(problem: &CauchyProblem, model: &NoiseModel) -> CauchyProblem {
    let mut out = problem.clone();
    if model.delta == 0.0 {
        return out;
    }
    for &t in &model.targets {
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ t.salt());
        match t {
            NoiseTarget::F => out.f = volume_noise(&out.f, model.delta, &mut rng),
            NoiseTarget::GD => {
                out.g_d = out.g_d.as_ref().map(|g| boundary_noise(g, model.delta, 1.5, &mut rng));
            }
            NoiseTarget::GN => {
                out.g_n = out.g_n.as_ref().map(|g| boundary_noise(g, model.delta, 0.5, &mut rng));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, DomainKind, GAMMA_OBS};

    fn fd_forcing(c: &ManufacturedCase, x: f64, y: f64) -> [f64; 2] {
        // Independent oracle: fourth-order central differences of v, p and z₂.
        let e = 1e-3;
        let d1 = |f: &dyn Fn(f64, f64) -> f64, dx: f64, dy: f64| {
            (-f(x + 2.0 * dx, y + 2.0 * dy) + 8.0 * f(x + dx, y + dy) - 8.0 * f(x - dx, y - dy)
                + f(x - 2.0 * dx, y - 2.0 * dy))
                / (12.0 * e)
        };
        let d2 = |f: &dyn Fn(f64, f64) -> f64, dx: f64, dy: f64| {
            (-f(x + 2.0 * dx, y + 2.0 * dy) + 16.0 * f(x + dx, y + dy) - 30.0 * f(x, y)
                + 16.0 * f(x - dx, y - dy)
                - f(x - 2.0 * dx, y - 2.0 * dy))
                / (12.0 * e * e)
        };
        let v = c.velocity(x, y);
        let z1 = c.z1(x, y);
        let mut out = [0.0; 2];
        for comp in 0..2 {
            let vc = |a: f64, b: f64| c.velocity(a, b)[comp];
            let zc = |a: f64, b: f64| c.z2(a, b)[comp];
            let p = |a: f64, b: f64| c.pressure(a, b);
            let lap = d2(&vc, e, 0.0) + d2(&vc, 0.0, e);
            let gv = [d1(&vc, e, 0.0), d1(&vc, 0.0, e)];
            let gz = [d1(&zc, e, 0.0), d1(&zc, 0.0, e)];
            let gp = if comp == 0 { d1(&p, e, 0.0) } else { d1(&p, 0.0, e) };
            out[comp] = -c.nu * lap + z1[0] * gv[0] + z1[1] * gv[1] + v[0] * gz[0] + v[1] * gz[1] + gp;
        }
        out
    }

    #[test]
    fn forcing_matches_finite_difference_oracle() {
        for name in [CaseName::Ms1, CaseName::Ms2, CaseName::Ms3] {
            let c = ManufacturedCase::new(name);
            for &(x, y) in &[(0.1, 0.2), (0.37, 0.81), (0.66, 0.45), (0.9, 0.05)] {
                let a = c.forcing(x, y);
                let b = fd_forcing(&c, x, y);
                for k in 0..2 {
                    assert!((a[k] - b[k]).abs() < 1e-6 * (1.0 + a[k].abs()), "{name} {a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn ms3_closed_form_forcing() {
        // f = ((2π³ − π) sin πx cos πy + π² cos πx cos πy + (π³/2) sin 2πx,
        //      −(2π³ + π) cos πx sin πy + π² sin πx sin πy + (π³/2) sin 2πy)
        let c = ManufacturedCase::new(CaseName::Ms3);
        let (x, y) = (0.23, 0.71);
        let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
        let p3 = PI.powi(3);
        let want = [
            (2.0 * p3 - PI) * sx * cy + PI * PI * cx * cy + 0.5 * p3 * (2.0 * PI * x).sin(),
            -(2.0 * p3 + PI) * cx * sy + PI * PI * sx * sy + 0.5 * p3 * (2.0 * PI * y).sin(),
        ];
        let got = c.forcing(x, y);
        assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn ms1_west_traction() {
        let g = build_grid(DomainKind::UnitSquare, 8).unwrap();
        let p = make_cauchy_data(&ManufacturedCase::new(CaseName::Ms1), &g, GAMMA_OBS).unwrap();
        let gn = p.g_n.unwrap();
        for k in 0..gn.len() {
            assert_eq!([gn.comps[0][k], gn.comps[1][k]], [1.0, -2.0]);
        }
    }

    #[test]
    fn incompatible_pairs() {
        let g = build_grid(DomainKind::SquareAnnulus, 8).unwrap();
        let ms0 = ManufacturedCase::new(CaseName::Ms0);
        let ms2 = ManufacturedCase::new(CaseName::Ms2);
        assert_eq!(make_incompatible_data(&ms0, &ms0, &g, GAMMA_OBS).unwrap_err(), Error::CasesIdentical);
        let p = make_incompatible_data(&ms2, &ms0, &g, GAMMA_OBS).unwrap();
        assert_eq!(p.g_n.unwrap().max_abs(), 0.0);
        assert!(p.g_d.unwrap().max_abs() > 1.0);
    }

    #[test]
    fn unknown_case() {
        assert_eq!(catalog("MS9").unwrap_err(), Error::UnknownCase("MS9".into()));
    }
}
