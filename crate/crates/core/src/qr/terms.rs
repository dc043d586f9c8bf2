//! Rows of the discrete Stokes/Oseen operators acting on the interleaved
//! state vector `[v₁, v₂, p]` per node.

use crate::fields::ops::velocity_gradient;
use crate::fields::{OseenCoefficients, ScalarField, VectorField};
use crate::linalg::{LeastSquaresTerm, SparseMatrix};
use crate::mesh::{BoundarySegment, Grid, SubdomainWindow};

pub type Row = Vec<(usize, f64)>;

pub const P: usize = 2;

pub fn idx(node: usize, comp: usize) -> usize {
    3 * node + comp
}

fn push(row: &mut Row, op: &SparseMatrix, i: usize, comp: usize, s: f64) {
    let (c, v) = op.row(i);
    row.extend(c.iter().zip(v).map(|(&j, &a)| (idx(j, comp), s * a)));
}

fn matrix(grid: &Grid, rows: Vec<Row>) -> SparseMatrix {
    SparseMatrix::from_rows(3 * grid.node_count(), rows)
}

/// `−νΔv + (z₁·∇)v + (v·∇)z₂ + ∇p`, rows `(node, comp)` scaled by `√w`.
pub fn momentum(grid: &Grid, coeffs: &OseenCoefficients) -> SparseMatrix {
    let ops = grid.ops();
    let gz = velocity_gradient(&coeffs.z2);
    let mut rows = Vec::with_capacity(2 * grid.node_count());
    for i in 0..grid.node_count() {
        let s = grid.weights[i].sqrt();
        let z1 = [coeffs.z1.x.values[i], coeffs.z1.y.values[i]];
        for c in 0..2 {
            let mut r = Row::new();
            push(&mut r, &ops.lap, i, c, -coeffs.nu * s);
            for (d, &zd) in z1.iter().enumerate() {
                if zd != 0.0 {
                    push(&mut r, ops.d(d), i, c, zd * s);
                }
            }
            for d in 0..2 {
                let g = gz.c[c][d][i];
                if g != 0.0 {
                    r.push((idx(i, d), g * s));
                }
            }
            push(&mut r, ops.d(c), i, P, s);
            rows.push(r);
        }
    }
    matrix(grid, rows)
}

pub fn momentum_target(grid: &Grid, f: &VectorField) -> Vec<f64> {
    let mut t = Vec::with_capacity(2 * grid.node_count());
    for i in 0..grid.node_count() {
        let s = grid.weights[i].sqrt();
        t.push(s * f.x.values[i]);
        t.push(s * f.y.values[i]);
    }
    t
}

/// `div v`, scaled by `√w`.
pub fn divergence(grid: &Grid) -> SparseMatrix {
    let ops = grid.ops();
    let rows = (0..grid.node_count())
        .map(|i| {
            let s = grid.weights[i].sqrt();
            let mut r = Row::new();
            push(&mut r, &ops.dx, i, 0, s);
            push(&mut r, &ops.dy, i, 1, s);
            r
        })
        .collect();
    matrix(grid, rows)
}

pub fn divergence_target(grid: &Grid, d: &ScalarField) -> Vec<f64> {
    (0..grid.node_count()).map(|i| grid.weights[i].sqrt() * d.values[i]).collect()
}

/// `∇(div v)` by composed first differences, rows `(node, axis)` scaled by `√w`.
pub fn grad_div(grid: &Grid) -> SparseMatrix {
    let ops = grid.ops();
    let mut rows = Vec::with_capacity(2 * grid.node_count());
    for i in 0..grid.node_count() {
        let s = grid.weights[i].sqrt();
        let mut r = Row::new();
        push(&mut r, &ops.dx_dx, i, 0, s);
        push(&mut r, &ops.dxy, i, 1, s);
        rows.push(r);
        let mut r = Row::new();
        push(&mut r, &ops.dy_dx, i, 0, s);
        push(&mut r, &ops.dy_dy, i, 1, s);
        rows.push(r);
    }
    matrix(grid, rows)
}

pub fn grad_div_target(grid: &Grid, d: &ScalarField) -> Vec<f64> {
    let ops = grid.ops();
    let gx = ops.dx.mul_vec(&d.values);
    let gy = ops.dy.mul_vec(&d.values);
    let mut t = Vec::with_capacity(2 * grid.node_count());
    for i in 0..grid.node_count() {
        let s = grid.weights[i].sqrt();
        t.push(s * gx[i]);
        t.push(s * gy[i]);
    }
    t
}

/// `σ(v,p)n + α v` on the segment, rows `(node, comp)` scaled by `√(arclength weight)`.
pub fn traction(grid: &Grid, seg: &BoundarySegment, nu: f64, alpha: Option<&[f64]>) -> SparseMatrix {
    let ops = grid.ops();
    let mut rows = Vec::with_capacity(2 * seg.len());
    for (k, &node) in seg.node_ids.iter().enumerate() {
        let s = seg.arclength_weights[k].sqrt();
        let n = seg.outward_normal[k];
        for c in 0..2 {
            let mut r = Row::new();
            for d in 0..2 {
                if n[d] != 0.0 {
                    push(&mut r, ops.d(d), node, c, nu * n[d] * s);
                    push(&mut r, ops.d(c), node, d, nu * n[d] * s);
                }
            }
            r.push((idx(node, P), -n[c] * s));
            if let Some(a) = alpha {
                r.push((idx(node, c), a[k] * s));
            }
            rows.push(r);
        }
    }
    matrix(grid, rows)
}

/// Boundary data in the row order of [`traction`].
pub fn boundary_target(seg: &BoundarySegment, comps: &[Vec<f64>]) -> Vec<f64> {
    let mut t = Vec::with_capacity(2 * seg.len());
    for k in 0..seg.len() {
        let s = seg.arclength_weights[k].sqrt();
        t.push(s * comps[0][k]);
        t.push(s * comps[1][k]);
    }
    t
}

fn seminorm_rows(grid: &Grid, i: usize, c: usize, rows: &mut Vec<Row>) {
    let ops = grid.ops();
    let s = grid.weights[i].sqrt();
    for (op, f) in [
        (&ops.dx, 1.0),
        (&ops.dy, 1.0),
        (&ops.dxx, 1.0),
        (&ops.dxy, std::f64::consts::SQRT_2),
        (&ops.dyy, 1.0),
    ] {
        let mut r = Row::new();
        push(&mut r, op, i, c, f * s);
        rows.push(r);
    }
}

/// Rows whose squared norm is `‖v‖²_{H²} + ‖p‖²_{H¹}`.
pub fn regularization(grid: &Grid) -> SparseMatrix {
    let ops = grid.ops();
    let mut rows = Vec::with_capacity(15 * grid.node_count());
    for i in 0..grid.node_count() {
        let s = grid.weights[i].sqrt();
        for c in 0..2 {
            rows.push(vec![(idx(i, c), s)]);
            seminorm_rows(grid, i, c, &mut rows);
        }
        rows.push(vec![(idx(i, P), s)]);
        let mut r = Row::new();
        push(&mut r, &ops.dx, i, P, s);
        rows.push(r);
        let mut r = Row::new();
        push(&mut r, &ops.dy, i, P, s);
        rows.push(r);
    }
    matrix(grid, rows)
}

/// Rows whose squared norm is `|v|²_{H¹} + |v|²_{H²}`.
pub fn velocity_seminorms(grid: &Grid) -> SparseMatrix {
    let mut rows = Vec::with_capacity(10 * grid.node_count());
    for i in 0..grid.node_count() {
        for c in 0..2 {
            seminorm_rows(grid, i, c, &mut rows);
        }
    }
    matrix(grid, rows)
}

/// Velocity samples on a window, scaled by `√(window weight)`.
pub fn observation(grid: &Grid, window: &SubdomainWindow) -> SparseMatrix {
    let mut rows = Vec::with_capacity(2 * window.len());
    for (k, &node) in window.node_ids.iter().enumerate() {
        let s = window.weights[k].sqrt();
        rows.push(vec![(idx(node, 0), s)]);
        rows.push(vec![(idx(node, 1), s)]);
    }
    matrix(grid, rows)
}

pub fn observation_target(window: &SubdomainWindow, v: &VectorField) -> Vec<f64> {
    let mut t = Vec::with_capacity(2 * window.len());
    for (k, &node) in window.node_ids.iter().enumerate() {
        let s = window.weights[k].sqrt();
        t.push(s * v.x.values[node]);
        t.push(s * v.y.values[node]);
    }
    t
}

/// `h (Δ − ∂ₓ∂ₓ − ∂ᵧ∂ᵧ) p`, scaled by `√w`.
///
/// Vanishes to third order on smooth pressures but sees the checkerboard mode
/// that the centered gradient misses.
pub fn pressure_stabilization(grid: &Grid) -> SparseMatrix {
    let ops = grid.ops();
    let rows = (0..grid.node_count())
        .map(|i| {
            let s = grid.weights[i].sqrt() * grid.h;
            let mut r = Row::new();
            push(&mut r, &ops.lap, i, P, s);
            push(&mut r, &ops.dx_dx, i, P, -s);
            push(&mut r, &ops.dy_dy, i, P, -s);
            r
        })
        .collect();
    matrix(grid, rows)
}

/// PDE rows shared by every solver: momentum, divergence and its gradient,
/// pressure stabilization.
pub fn pde_terms(grid: &Grid, coeffs: &OseenCoefficients, f: &VectorField, d: &ScalarField) -> Vec<LeastSquaresTerm> {
    vec![
        LeastSquaresTerm::new("momentum", momentum(grid, coeffs), momentum_target(grid, f), 1.0),
        LeastSquaresTerm::new("div", divergence(grid), divergence_target(grid, d), 1.0),
        LeastSquaresTerm::new("grad_div", grad_div(grid), grad_div_target(grid, d), 1.0),
        LeastSquaresTerm::new("p_stab", pressure_stabilization(grid), vec![0.0; grid.node_count()], 1.0),
    ]
}

/// Full state indices of the velocity unknowns on a segment.
pub fn velocity_indices(seg: &BoundarySegment) -> Vec<usize> {
    seg.node_ids.iter().flat_map(|&k| [idx(k, 0), idx(k, 1)]).collect()
}

/// Values matching [`velocity_indices`].
pub fn velocity_values(comps: &[Vec<f64>]) -> Vec<f64> {
    (0..comps[0].len()).flat_map(|k| [comps[0][k], comps[1][k]]).collect()
}
