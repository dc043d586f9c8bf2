//! Grid-refinement probes: operator truncation, forward solves, trace
//! interpolation and the log-stability estimates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::*;
use crate::error::{Error, Result};
use crate::fields::norms::{boundary_l2, boundary_norm, norm_h1, norm_h2, norm_l2, norm_l2_on, state_norm_h2h1};
use crate::fields::ops::{curl_scal, curl_vec, divergence, gradient, laplacian, normal_derivative, traction, vector_laplacian, velocity_gradient};
use crate::fields::{BoundaryField, ScalarField, StokesState, VectorField};
use crate::kv::{solve_forward_phi, solve_forward_psi};
use crate::manufactured::{CaseName, ManufacturedCase};
use crate::mesh::{build_grid, DomainKind, Grid, SubdomainWindow, GAMMA_0, GAMMA_C, GAMMA_OBS};

/// Errors at or below this level count as exact.
pub const ROUNDOFF: f64 = 1e-9;
pub const ORDER_INTERIOR: f64 = 1.8;
pub const ORDER_BOUNDARY: f64 = 1.0;
pub const ORDER_IDENTITY: f64 = 1.0;
pub const ORDER_FWD_V: f64 = 1.5;
pub const ORDER_FWD_P: f64 = 1.0;
/// Allowed growth of the largest interpolation ratio under refinement.
pub const INTERP_GROWTH: f64 = 0.2;
pub const HOMOGENEITY_TOL: f64 = 1e-6;
pub const INTERP_FAMILY: usize = 20;
pub const INTERP_SEED: u64 = 43;

/// Observed order between two grid levels, zero when either error is at roundoff.
pub fn order(e_coarse: f64, e_fine: f64, n_coarse: f64, n_fine: f64) -> f64 {
    if e_coarse <= ROUNDOFF || e_fine <= ROUNDOFF {
        return 0.0;
    }
    (e_coarse / e_fine).ln() / (n_fine / n_coarse).ln()
}

/// Order flag with the roundoff exemption.
fn order_ok(o: f64, e_fine: f64, min: f64) -> bool {
    e_fine <= ROUNDOFF || o >= min
}

/// Distance of a node to the domain boundary in grid steps.
fn depth(grid: &Grid, node: usize) -> f64 {
    let (x, y) = grid.coords(node);
    let outer = x.min(y).min(1.0 - x).min(1.0 - y);
    let d = match grid.kind {
        DomainKind::UnitSquare => outer,
        DomainKind::SquareAnnulus => outer.min((x - 0.5).abs().max((y - 0.5).abs()) - 0.125),
    };
    (d / grid.h).round()
}

fn max_abs_where(v: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    v.iter().enumerate().filter(|(i, _)| keep(*i)).fold(0.0, |m, (_, x)| m.max(x.abs()))
}

/// `(interior max, overall max, boundary max)` of a node-wise error.
fn split_errors(grid: &Grid, comps: &[Vec<f64>], min_depth: f64) -> (f64, f64, f64) {
    let mut out = (0.0f64, 0.0f64, 0.0f64);
    for c in comps {
        out.0 = out.0.max(max_abs_where(c, |i| depth(grid, i) >= min_depth));
        out.1 = out.1.max(max_abs_where(c, |_| true));
        out.2 = out.2.max(max_abs_where(c, |i| !grid.interior_mask[i]));
    }
    out
}

fn diff(a: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let g = a.grid();
    (0..g.node_count()).map(|i| {
        let (x, y) = g.coords(i);
        a.values[i] - f(x, y)
    }).collect()
}

/// Boundary nodes of every segment with axis-aligned normals, no corners.
fn flat_boundary(grid: &Grid) -> Vec<(Arc<crate::mesh::BoundarySegment>, usize)> {
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for seg in grid.boundary_segments.values() {
        for k in 0..seg.len() {
            let n = seg.outward_normal[k];
            if (n[0] == 0.0 || n[1] == 0.0) && seg.edge_normals[k].len() == 1 && seen.insert(seg.node_ids[k]) {
                out.push((seg.clone(), k));
            }
        }
    }
    out
}

/// Named node-wise errors of one grid level.
fn ops_errors(case: &ManufacturedCase, grid: &Arc<Grid>) -> Vec<(String, (f64, f64, f64))> {
    let ex = case.exact_state(grid);
    let nu = case.nu;
    let mut out = Vec::new();
    let lap = vector_laplacian(&ex.v);
    out.push((
        "laplacian".into(),
        split_errors(grid, &[diff(&lap.x, |x, y| case.velocity_laplacian(x, y)[0]), diff(&lap.y, |x, y| case.velocity_laplacian(x, y)[1])], 2.0),
    ));
    let gp = gradient(&ex.p);
    out.push((
        "gradient".into(),
        split_errors(grid, &[diff(&gp.x, |x, y| case.pressure_gradient(x, y)[0]), diff(&gp.y, |x, y| case.pressure_gradient(x, y)[1])], 2.0),
    ));
    let dv = divergence(&ex.v);
    out.push((
        "divergence".into(),
        split_errors(grid, &[diff(&dv, |x, y| {
            let g = case.velocity_gradient(x, y);
            g[0][0] + g[1][1]
        })], 2.0),
    ));
    let cv = curl_vec(&ex.v);
    out.push((
        "curl".into(),
        split_errors(grid, &[diff(&cv, |x, y| {
            let g = case.velocity_gradient(x, y);
            g[1][0] - g[0][1]
        })], 2.0),
    ));
    // Traction: boundary only.
    let mut tr = 0.0f64;
    for seg in grid.boundary_segments.values() {
        let d = traction(&ex, nu, seg).sub(&case.traction_on(grid, seg));
        tr = tr.max(d.max_abs());
    }
    out.push(("traction".into(), (0.0, tr, tr)));

    // Identities on the deep interior, with f = −Δv + ∇p formed discretely.
    let f = vector_laplacian(&ex.v).scale(-1.0).add(&gradient(&ex.p));
    let id1 = laplacian(&cv).scale(-1.0).sub(&curl_vec(&f));
    let id2 = laplacian(&dv.sub(&ex.p)).scale(-1.0).sub(&divergence(&f));
    let id3 = lap.scale(-1.0).sub(&curl_scal(&cv).sub(&gradient(&dv)));
    for (name, comps) in [
        ("identity_curl", vec![id1.values]),
        ("identity_div_p", vec![id2.values]),
        ("identity_lap", vec![id3.x.values, id3.y.values]),
    ] {
        let e = split_errors(grid, &comps, 3.0);
        out.push((name.into(), (e.0, e.0, 0.0)));
    }

    // Trace algebra on flat boundary nodes.
    let flat = flat_boundary(grid);
    let (mut dn, mut pt, mut ct) = (0.0f64, 0.0f64, 0.0f64);
    let g = velocity_gradient(&ex.v);
    for (seg, k) in &flat {
        let node = seg.node_ids[*k];
        let n = seg.outward_normal[*k];
        let (x, y) = grid.coords(node);
        let ndv = normal_derivative(&ex.v, seg);
        let sig = case.traction(x, y, n);
        let ga = case.velocity_gradient(x, y);
        let p = case.pressure(x, y);
        for c in 0..2 {
            // ν ∂v/∂n = σn + pn − ν (∇v)ᵀn
            let rhs = sig[c] + p * n[c] - nu * (ga[0][c] * n[0] + ga[1][c] * n[1]);
            dn = dn.max((nu * ndv.comps[c][*k] - rhs).abs());
        }
        // p = 2ν (∂v/∂n·n) − σn·n, all discrete.
        let td = traction(&ex, nu, seg);
        let ndn = ndv.comps[0][*k] * n[0] + ndv.comps[1][*k] * n[1];
        let tnn = td.comps[0][*k] * n[0] + td.comps[1][*k] * n[1];
        pt = pt.max((ex.p.values[node] - (2.0 * nu * ndn - tnn)).abs());
        // curl v = t·(2D(v)n) where v·n vanishes along the edge.
        if seg.name == GAMMA_OBS || grid.kind == DomainKind::UnitSquare {
            let vn = ex.v.x.values[node] * n[0] + ex.v.y.values[node] * n[1];
            if vn.abs() <= 1e-14 {
                let t = [-n[1], n[0]];
                let mut s = 0.0;
                for c in 0..2 {
                    for d in 0..2 {
                        s += t[c] * (g.c[c][d][node] + g.c[d][c][node]) * n[d];
                    }
                }
                ct = ct.max((cv.values[node] - s).abs());
            }
        }
    }
    out.push(("trace_normal_derivative".into(), (0.0, dn, dn)));
    out.push(("trace_pressure".into(), (0.0, pt, pt)));
    out.push(("trace_curl_tangent".into(), (0.0, ct, ct)));
    out
}

/// Truncation orders of the discrete operators on the sampled exact fields.
pub fn run_ops_check(case: &ManufacturedCase, kind: DomainKind, levels: &[usize]) -> Result<StudyReport> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::TooFewRows { needed: 2, found: levels.len() });
    }
    let mut rep = StudyReport::new(StudyKind::OpsCheck);
    rep.echo("case", case.name);
    rep.echo("domain", format!("{kind:?}"));
    rep.echo("n", levels.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    let mut prev: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    let mut prev_n = 0usize;
    for &n in &levels {
        let grid = build_grid(kind, n)?;
        for (name, e) in ops_errors(case, &grid) {
            let mut r = StudyRow::new(n as f64);
            r.label = name.clone();
            r.error_v_l2 = e.0;
            r.error_v_h1 = e.1;
            r.error_p_l2 = e.2;
            if let Some(p) = prev.get(&name) {
                r.obs_quantity = order(p.0, e.0, prev_n as f64, n as f64);
                r.bound_value = order(p.2, e.2, prev_n as f64, n as f64);
            }
            prev.insert(name, e);
            rep.rows.push(r);
        }
        prev_n = n;
    }
    rep.flags = finalize_ops(&rep.rows);
    Ok(rep)
}

pub fn finalize_ops(rows: &[StudyRow]) -> BTreeMap<String, bool> {
    let finest = rows.iter().map(|r| r.param).fold(0.0, f64::max);
    let mut flags = BTreeMap::new();
    for r in rows.iter().filter(|r| r.param == finest) {
        let q = &r.label;
        let interior_only = q.starts_with("identity");
        let boundary_only = q == "traction" || q.starts_with("trace");
        if !boundary_only {
            let min = if interior_only { ORDER_IDENTITY } else { ORDER_INTERIOR };
            flags.insert(format!("interior_{q}"), order_ok(r.obs_quantity, r.error_v_l2, min));
        }
        if !interior_only {
            let min = if boundary_only && q != "traction" { ORDER_IDENTITY } else { ORDER_BOUNDARY };
            flags.insert(format!("boundary_{q}"), order_ok(r.bound_value, r.error_p_l2, min));
        }
    }
    flags
}

/// L² errors of both forward problems with exact data, per case and level.
pub fn run_forward_study(cases: &[ManufacturedCase], levels: &[usize]) -> Result<StudyReport> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let mut rep = StudyReport::new(StudyKind::Convergence);
    rep.echo("mode", "forward");
    rep.echo("case", cases.iter().map(|c| c.name.to_string()).collect::<Vec<_>>().join(","));
    rep.echo("n", levels.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    for case in cases {
        for &n in &levels {
            let grid = build_grid(DomainKind::SquareAnnulus, n)?;
            let ex = case.exact_state(&grid);
            let co = case.coefficients(&grid);
            let f = case.forcing_field(&grid);
            let outer = grid.segment(GAMMA_OBS)?.clone();
            let rim = grid.segment(GAMMA_C)?.clone();
            let phi = solve_forward_phi(&grid, &co, &f, &case.trace_on(&grid, &outer), &case.traction_on(&grid, &rim))?;
            let psi = solve_forward_psi(&grid, &co, &f, &case.traction_on(&grid, &outer), &case.trace_on(&grid, &rim))?;
            for (tag, s) in [("phi", phi), ("psi", psi)] {
                let e = s.sub(&ex);
                let mut r = StudyRow::new(n as f64);
                r.label = format!("{}/{tag}", case.name);
                r.error_v_l2 = norm_l2(&e.v);
                r.error_v_h1 = norm_h1(&e.v);
                r.error_p_l2 = norm_l2(&e.p);
                rep.rows.push(r);
            }
        }
    }
    rep.flags = finalize_forward(&mut rep.rows, &mut rep.constants);
    Ok(rep)
}

/// Orders from the coarsest to the finest level of each label.
pub fn finalize_forward(rows: &mut [StudyRow], constants: &mut BTreeMap<String, f64>) -> BTreeMap<String, bool> {
    let mut labels: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
    labels.sort();
    labels.dedup();
    let mut flags = BTreeMap::new();
    for l in labels {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].label == l).collect();
        let lo = idx.iter().copied().min_by(|&a, &b| rows[a].param.total_cmp(&rows[b].param)).unwrap();
        let hi = idx.iter().copied().max_by(|&a, &b| rows[a].param.total_cmp(&rows[b].param)).unwrap();
        let (a, b) = (&rows[lo], &rows[hi]);
        let ov = order(a.error_v_l2, b.error_v_l2, a.param, b.param);
        let op = order(a.error_p_l2, b.error_p_l2, a.param, b.param);
        let (ev, ep) = (b.error_v_l2, b.error_p_l2);
        rows[hi].obs_quantity = ov;
        rows[hi].bound_value = op;
        constants.insert(format!("order_v_{l}"), ov);
        constants.insert(format!("order_p_{l}"), op);
        flags.insert(format!("order_v_{l}"), order_ok(ov, ev, ORDER_FWD_V));
        flags.insert(format!("order_p_{l}"), order_ok(op, ep, ORDER_FWD_P));
    }
    flags
}

/// Seeded band-limited vector field with modes up to 3 in each direction.
pub fn band_limited(grid: &Arc<Grid>, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comp = || {
        let c: Vec<[f64; 4]> = (0..16)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        ScalarField::from_fn(grid, |x, y| {
            let pi = std::f64::consts::PI;
            let mut s = 0.0;
            for (m, a) in c.iter().enumerate() {
                let (k, l) = ((m / 4) as f64, (m % 4) as f64);
                s += a[0] * (k * pi * x + pi * a[2]).cos() * (l * pi * y + pi * a[3]).cos() * (1.0 + a[1]) / (1.0 + k + l);
            }
            s
        })
    };
    let x = comp();
    let y = comp();
    VectorField::new(x, y)
}

/// The three trace-interpolation ratios on the rim `Γ₀`.
pub fn interp_ratios(v: &VectorField) -> [f64; 3] {
    let grid = v.grid();
    let rim = grid.segment(GAMMA_0).expect("annulus rim");
    let g = velocity_gradient(v);
    let pick = |c: &[f64]| rim.node_ids.iter().map(|&k| c[k]).collect::<Vec<f64>>();
    let grad = BoundaryField {
        segment: rim.clone(),
        comps: vec![pick(&g.c[0][0]), pick(&g.c[0][1]), pick(&g.c[1][0]), pick(&g.c[1][1])],
    };
    let tv = boundary_l2(&BoundaryField::trace(v, rim));
    let tg = boundary_l2(&grad);
    let (l2, h1, h2) = (norm_l2(v), norm_h1(v), norm_h2(v));
    let q = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    [
        q(tv, (l2 * h1).sqrt()),
        q(tg, (h1 * h2).sqrt()),
        q(tg, l2.powf(0.25) * h2.powf(0.75)),
    ]
}

/// Interpolation ratios of the seeded family on each annulus level.
pub fn run_interp_probe(levels: &[usize], family: usize, seed: u64) -> Result<StudyReport> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let mut rep = StudyReport::new(StudyKind::Interp);
    rep.echo("family", family);
    rep.echo("seed", seed);
    rep.echo("n", levels.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    for &n in &levels {
        let grid = build_grid(DomainKind::SquareAnnulus, n)?;
        for k in 0..family {
            let v = band_limited(&grid, seed.wrapping_add(k as u64));
            let r = interp_ratios(&v);
            let mut row = StudyRow::new(n as f64);
            row.label = format!("field={k}");
            row.error_v_l2 = norm_l2(&v);
            row.error_v_h1 = norm_h1(&v);
            row.error_p_l2 = norm_h2(&v);
            row.obs_quantity = r[0];
            row.bound_value = r.iter().copied().fold(0.0, f64::max);
            row.set("r1", r[0]);
            row.set("r2", r[1]);
            row.set("r3", r[2]);
            rep.rows.push(row);
        }
    }
    rep.flags = finalize_interp(&rep.rows, &mut rep.constants);
    Ok(rep)
}

pub fn finalize_interp(rows: &[StudyRow], constants: &mut BTreeMap<String, f64>) -> BTreeMap<String, bool> {
    let lo = rows.iter().map(|r| r.param).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.param).fold(0.0, f64::max);
    let mut flags = BTreeMap::new();
    for key in ["r1", "r2", "r3"] {
        let mx = |n: f64| rows.iter().filter(|r| r.param == n).map(|r| r.get(key)).fold(0.0, f64::max);
        let (a, b) = (mx(lo), mx(hi));
        constants.insert(format!("max_{key}_n{}", lo as usize), a);
        constants.insert(format!("max_{key}_n{}", hi as usize), b);
        flags.insert(format!("growth_{key}"), b <= a * (1.0 + INTERP_GROWTH));
    }
    flags
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    Distributed,
    Boundary,
}

impl FromStr for ProbeMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "distributed" => Ok(ProbeMode::Distributed),
            "boundary" => Ok(ProbeMode::Boundary),
            _ => Err(format!("unknown probe mode `{s}` (expected distributed or boundary)")),
        }
    }
}

impl fmt::Display for ProbeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeMode::Distributed => "distributed",
            ProbeMode::Boundary => "boundary",
        })
    }
}

/// Observation quantity of a sampled state.
fn observation(mode: ProbeMode, case: &ManufacturedCase, grid: &Arc<Grid>, s: &StokesState, window: &SubdomainWindow) -> Result<f64> {
    let f = norm_l2(&case.forcing_field(grid));
    Ok(f + match mode {
        ProbeMode::Distributed => norm_l2_on(&s.v, window),
        ProbeMode::Boundary => {
            let obs = grid.segment(GAMMA_OBS)?;
            boundary_norm(&BoundaryField::trace(&s.v, obs), 1.5)? + boundary_norm(&case.traction_on(grid, obs), 0.5)?
        }
    })
}

/// `ln(LHS) − ln K − ln M + q ln ln(1 + M/O)`.
pub fn log_ratio(lhs: f64, ln_k: f64, m: f64, o: f64, q: f64) -> f64 {
    lhs.ln() - ln_k - m.ln() + q * (1.0 + m / o).ln().ln()
}

/// Log-stability ratios over scaled copies of each case.
pub fn run_stability_probe(
    mode: ProbeMode,
    cases: &[ManufacturedCase],
    grid: &Arc<Grid>,
    scales: &[f64],
    window: &SubdomainWindow,
) -> Result<StudyReport> {
    let mut rep = StudyReport::new(StudyKind::Stability);
    rep.echo("mode", mode);
    rep.echo("case", cases.iter().map(|c| c.name.to_string()).collect::<Vec<_>>().join(","));
    rep.echo("domain", format!("{:?}", grid.kind));
    rep.echo("n", grid.n);
    rep.echo("scales", scales.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    let mut scales = scales.to_vec();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    for base in cases {
        let ln_k = base.coefficients(grid).ln_k;
        for &sc in &scales {
            let case = base.scaled(sc);
            let s = case.exact_state(grid);
            let m = state_norm_h2h1(&s);
            let o = observation(mode, &case, grid, &s, window)?;
            let lhs1 = norm_l2(&s.v);
            let lhs2 = norm_l2(&curl_vec(&s.v)) + norm_l2(&s.p.sub(&divergence(&s.v)));
            let mut r = StudyRow::new(sc);
            r.label = case.name.to_string();
            r.error_v_l2 = lhs1;
            r.error_v_h1 = norm_h1(&s.v);
            r.error_p_l2 = norm_l2(&s.p);
            r.obs_quantity = o;
            r.bound_value = m;
            r.set("lhs_curl", lhs2);
            r.set("ln_k", ln_k);
            if m > 0.0 {
                r.set("log_ratio_l2", log_ratio(lhs1, ln_k, m, o, 1.0));
                r.set("log_ratio_curl", log_ratio(lhs2, ln_k, m, o, 0.5));
            }
            rep.rows.push(r);
        }
    }
    rep.flags = finalize_stability(&rep.rows, &mut rep.constants);
    Ok(rep)
}

pub fn finalize_stability(rows: &[StudyRow], constants: &mut BTreeMap<String, f64>) -> BTreeMap<String, bool> {
    let mut flags = BTreeMap::new();
    let mut labels: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
    labels.dedup();
    for key in ["log_ratio_l2", "log_ratio_curl"] {
        let mut family = Vec::new();
        let mut homogeneous = true;
        for l in &labels {
            let vals: Vec<f64> = rows.iter().filter(|r| &r.label == l && r.extra.contains_key(key)).map(|r| r.get(key)).collect();
            if let Some(&first) = vals.first() {
                homogeneous &= vals.iter().all(|v| (v - first).abs() <= HOMOGENEITY_TOL);
                family.push(first);
            }
        }
        let short = key.trim_start_matches("log_ratio_");
        flags.insert(format!("homogeneity_{short}"), homogeneous);
        flags.insert(format!("family_{short}"), log_band_ok(&family));
        let hi = family.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = family.iter().copied().fold(f64::INFINITY, f64::min);
        constants.insert(format!("ln_C_fit_{short}"), hi);
        constants.insert(format!("log_spread_{short}"), hi - lo);
    }
    flags
}

/// The cases of the stability family.
pub fn stability_family() -> Vec<ManufacturedCase> {
    [CaseName::Ms1, CaseName::Ms2, CaseName::Ms3].into_iter().map(ManufacturedCase::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_ratio_is_geometric() {
        let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
        let v = VectorField::new(ScalarField::constant(&grid, 2.0), ScalarField::constant(&grid, 0.0));
        let r = interp_ratios(&v);
        let expect = (1.0f64 / (15.0 / 16.0)).sqrt();
        assert!((r[0] - expect).abs() < 1e-12, "{}", r[0]);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn zero_field_ratios_vanish() {
        let grid = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
        assert_eq!(interp_ratios(&VectorField::zeros(&grid)), [0.0; 3]);
    }

    #[test]
    fn order_of_quadratic_decay() {
        assert!((order(4.0, 1.0, 16.0, 32.0) - 2.0).abs() < 1e-15);
    }
}
