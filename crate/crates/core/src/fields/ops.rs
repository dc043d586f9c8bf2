//! Finite-difference operators.
//!
//! Every operator is a sparse matrix over node values, so the field-level
//! functions below and the least-squares assembly share one set of stencils.

use super::{BoundaryField, OseenCoefficients, ScalarField, StokesState, TensorField, VectorField};
use crate::linalg::SparseMatrix;
use crate::mesh::{BoundarySegment, Grid};

#[derive(Debug, Clone)]
pub struct Operators {
    pub dx: SparseMatrix,
    pub dy: SparseMatrix,
    pub dxx: SparseMatrix,
    pub dyy: SparseMatrix,
    /// Mixed second difference as the composition `dx · dy`.
    pub dxy: SparseMatrix,
    pub lap: SparseMatrix,
    /// Compositions of first differences used by `∇(div v)`.
    pub dx_dx: SparseMatrix,
    pub dy_dy: SparseMatrix,
    pub dy_dx: SparseMatrix,
}

impl Operators {
    pub(crate) fn build(grid: &Grid) -> Self {
        let dx = first_difference(grid, 0);
        let dy = first_difference(grid, 1);
        let dxx = second_difference(grid, 0);
        let dyy = second_difference(grid, 1);
        let dxy = dx.matmul(&dy);
        let lap = dxx.lin_comb(1.0, &dyy, 1.0);
        Operators {
            dx_dx: dx.matmul(&dx),
            dy_dy: dy.matmul(&dy),
            dy_dx: dy.matmul(&dx),
            dx,
            dy,
            dxx,
            dyy,
            dxy,
            lap,
        }
    }

    pub fn d(&self, axis: usize) -> &SparseMatrix {
        if axis == 0 { &self.dx } else { &self.dy }
    }
}

fn neighbor(grid: &Grid, node: usize, axis: usize, step: isize) -> Option<usize> {
    let (i, j) = grid.nodes[node];
    let (i, j) = (i as isize, j as isize);
    if axis == 0 { grid.node_at(i + step, j) } else { grid.node_at(i, j + step) }
}

fn first_difference(grid: &Grid, axis: usize) -> SparseMatrix {
    let s = 1.0 / (2.0 * grid.h);
    let rows = (0..grid.node_count())
        .map(|k| {
            let nb = |st| neighbor(grid, k, axis, st);
            match (nb(-1), nb(1)) {
                (Some(m), Some(p)) => vec![(m, -s), (p, s)],
                _ => match (nb(1), nb(2), nb(-1), nb(-2)) {
                    (Some(p1), Some(p2), _, _) => vec![(k, -3.0 * s), (p1, 4.0 * s), (p2, -s)],
                    (_, _, Some(m1), Some(m2)) => vec![(k, 3.0 * s), (m1, -4.0 * s), (m2, s)],
                    _ => panic!("no first-difference stencil at node {k}"),
                },
            }
        })
        .collect();
    SparseMatrix::from_rows(grid.node_count(), rows)
}

fn second_difference(grid: &Grid, axis: usize) -> SparseMatrix {
    let s = 1.0 / (grid.h * grid.h);
    let rows = (0..grid.node_count())
        .map(|k| {
            let nb = |st| neighbor(grid, k, axis, st);
            match (nb(-1), nb(1)) {
                (Some(m), Some(p)) => vec![(m, s), (k, -2.0 * s), (p, s)],
                _ => {
                    let fwd = (nb(1), nb(2), nb(3));
                    let bwd = (nb(-1), nb(-2), nb(-3));
                    match (fwd, bwd) {
                        ((Some(a), Some(b), Some(c)), _) | (_, (Some(a), Some(b), Some(c))) => {
                            vec![(k, 2.0 * s), (a, -5.0 * s), (b, 4.0 * s), (c, -s)]
                        }
                        _ => panic!("no second-difference stencil at node {k}"),
                    }
                }
            }
        })
        .collect();
    SparseMatrix::from_rows(grid.node_count(), rows)
}

fn apply(op: &SparseMatrix, u: &ScalarField) -> ScalarField {
    ScalarField::new(u.grid().clone(), op.mul_vec(&u.values))
}

pub fn gradient(u: &ScalarField) -> VectorField {
    let ops = u.grid().ops();
    VectorField::new(apply(&ops.dx, u), apply(&ops.dy, u))
}

pub fn divergence(y: &VectorField) -> ScalarField {
    let ops = y.grid().ops();
    apply(&ops.dx, &y.x).add(&apply(&ops.dy, &y.y))
}

pub fn laplacian(u: &ScalarField) -> ScalarField {
    apply(&u.grid().ops().lap, u)
}

pub fn vector_laplacian(y: &VectorField) -> VectorField {
    VectorField::new(laplacian(&y.x), laplacian(&y.y))
}

/// `∂₁y₂ − ∂₂y₁`.
pub fn curl_vec(y: &VectorField) -> ScalarField {
    let ops = y.grid().ops();
    apply(&ops.dx, &y.y).sub(&apply(&ops.dy, &y.x))
}

/// `(∂₂w, −∂₁w)`.
pub fn curl_scal(w: &ScalarField) -> VectorField {
    let ops = w.grid().ops();
    VectorField::new(apply(&ops.dy, w), apply(&ops.dx, w).scale(-1.0))
}

/// `(∇y)_{cd} = ∂_d y_c`.
pub fn velocity_gradient(y: &VectorField) -> TensorField {
    let ops = y.grid().ops();
    TensorField {
        c: [
            [ops.dx.mul_vec(&y.x.values), ops.dy.mul_vec(&y.x.values)],
            [ops.dx.mul_vec(&y.y.values), ops.dy.mul_vec(&y.y.values)],
        ],
    }
}

pub fn sym_gradient(y: &VectorField) -> TensorField {
    let g = velocity_gradient(y);
    let off: Vec<f64> = g.c[0][1].iter().zip(&g.c[1][0]).map(|(a, b)| 0.5 * (a + b)).collect();
    TensorField { c: [[g.c[0][0].clone(), off.clone()], [off, g.c[1][1].clone()]] }
}

/// `σ(v,p)n = ν(∇v + ∇vᵀ)n − pn` on each node of the segment.
pub fn traction(state: &StokesState, nu: f64, segment: &std::sync::Arc<BoundarySegment>) -> BoundaryField {
    let g = velocity_gradient(&state.v);
    let mut out = [Vec::new(), Vec::new()];
    for (k, &node) in segment.node_ids.iter().enumerate() {
        let n = segment.outward_normal[k];
        let p = state.p.values[node];
        for c in 0..2 {
            let mut s = -p * n[c];
            for d in 0..2 {
                s += nu * (g.c[c][d][node] + g.c[d][c][node]) * n[d];
            }
            out[c].push(s);
        }
    }
    BoundaryField::vector(segment.clone(), out[0].clone(), out[1].clone())
}

/// `(∇y)n` on each node of the segment.
pub fn normal_derivative(y: &VectorField, segment: &std::sync::Arc<BoundarySegment>) -> BoundaryField {
    let g = velocity_gradient(y);
    let mut out = [Vec::new(), Vec::new()];
    for (k, &node) in segment.node_ids.iter().enumerate() {
        let n = segment.outward_normal[k];
        for (c, o) in out.iter_mut().enumerate() {
            o.push(g.c[c][0][node] * n[0] + g.c[c][1][node] * n[1]);
        }
    }
    BoundaryField::vector(segment.clone(), out[0].clone(), out[1].clone())
}

/// `−νΔv + (z₁·∇)v + (v·∇)z₂ + ∇p − f`.
pub fn oseen_residual(state: &StokesState, coeffs: &OseenCoefficients, f: &VectorField) -> VectorField {
    let gv = velocity_gradient(&state.v);
    let gz = velocity_gradient(&coeffs.z2);
    let gp = gradient(&state.p);
    let lap = vector_laplacian(&state.v);
    let n = state.grid().node_count();
    let z1 = [&coeffs.z1.x.values, &coeffs.z1.y.values];
    let v = [&state.v.x.values, &state.v.y.values];
    let comp = |c: usize, lapc: &[f64], gpc: &[f64], fc: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                -coeffs.nu * lapc[i]
                    + z1[0][i] * gv.c[c][0][i]
                    + z1[1][i] * gv.c[c][1][i]
                    + v[0][i] * gz.c[c][0][i]
                    + v[1][i] * gz.c[c][1][i]
                    + gpc[i]
                    - fc[i]
            })
            .collect()
    };
    let grid = state.grid().clone();
    VectorField::new(
        ScalarField::new(grid.clone(), comp(0, &lap.x.values, &gp.x.values, &f.x.values)),
        ScalarField::new(grid, comp(1, &lap.y.values, &gp.y.values, &f.y.values)),
    )
}

pub fn div_residual(state: &StokesState, d: &ScalarField) -> ScalarField {
    divergence(&state.v).sub(d)
}
