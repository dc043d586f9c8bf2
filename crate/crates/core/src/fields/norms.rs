//! Trapezoid-weighted discrete norms.

use super::{spectral, BoundaryField, ScalarField, StokesState, VectorField};
use crate::error::Result;
use crate::mesh::SubdomainWindow;

/// Fields made of one or more node-valued components on a grid.
pub trait GridFunction {
    fn components(&self) -> Vec<&ScalarField>;
}

impl GridFunction for ScalarField {
    fn components(&self) -> Vec<&ScalarField> {
        vec![self]
    }
}

impl GridFunction for VectorField {
    fn components(&self) -> Vec<&ScalarField> {
        vec![&self.x, &self.y]
    }
}

fn weighted_sq(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(w, v)| w * v * v).sum()
}

pub fn l2_sq<F: GridFunction + ?Sized>(f: &F) -> f64 {
    f.components().iter().map(|c| weighted_sq(&c.grid().weights, &c.values)).sum()
}

pub fn h1_semi_sq<F: GridFunction + ?Sized>(f: &F) -> f64 {
    f.components()
        .iter()
        .map(|c| {
            let ops = c.grid().ops();
            let w = &c.grid().weights;
            weighted_sq(w, &ops.dx.mul_vec(&c.values)) + weighted_sq(w, &ops.dy.mul_vec(&c.values))
        })
        .sum()
}

/// `‖∂xx‖² + 2‖∂xy‖² + ‖∂yy‖²`.
pub fn h2_semi_sq<F: GridFunction + ?Sized>(f: &F) -> f64 {
    f.components()
        .iter()
        .map(|c| {
            let ops = c.grid().ops();
            let w = &c.grid().weights;
            weighted_sq(w, &ops.dxx.mul_vec(&c.values))
                + 2.0 * weighted_sq(w, &ops.dxy.mul_vec(&c.values))
                + weighted_sq(w, &ops.dyy.mul_vec(&c.values))
        })
        .sum()
}

pub fn norm_l2<F: GridFunction + ?Sized>(f: &F) -> f64 {
    l2_sq(f).sqrt()
}

/// `‖·‖_{L²(ω)}` over a window (rectangle or boundary run).
pub fn norm_l2_on<F: GridFunction + ?Sized>(f: &F, region: &SubdomainWindow) -> f64 {
    f.components()
        .iter()
        .map(|c| {
            region.node_ids.iter().zip(&region.weights).map(|(&k, w)| w * c.values[k] * c.values[k]).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

pub fn seminorm_h1<F: GridFunction + ?Sized>(f: &F) -> f64 {
    h1_semi_sq(f).sqrt()
}

pub fn seminorm_h2<F: GridFunction + ?Sized>(f: &F) -> f64 {
    h2_semi_sq(f).sqrt()
}

pub fn norm_h1<F: GridFunction + ?Sized>(f: &F) -> f64 {
    (l2_sq(f) + h1_semi_sq(f)).sqrt()
}

pub fn norm_h2<F: GridFunction + ?Sized>(f: &F) -> f64 {
    (l2_sq(f) + h1_semi_sq(f) + h2_semi_sq(f)).sqrt()
}

/// `(‖v‖²_{H²} + ‖p‖²_{H¹})^{1/2}`.
pub fn state_norm_h2h1(s: &StokesState) -> f64 {
    state_norm_h2h1_sq(s).sqrt()
}

pub fn state_norm_h2h1_sq(s: &StokesState) -> f64 {
    l2_sq(&s.v) + h1_semi_sq(&s.v) + h2_semi_sq(&s.v) + l2_sq(&s.p) + h1_semi_sq(&s.p)
}

/// Arclength-weighted L² norm on the segment.
pub fn boundary_l2(g: &BoundaryField) -> f64 {
    g.comps.iter().map(|c| weighted_sq(&g.segment.arclength_weights, c)).sum::<f64>().sqrt()
}

/// Spectral `H^s` norm, `s ∈ {0, 1/2, 1, 3/2}`.
pub fn boundary_norm(g: &BoundaryField, s: f64) -> Result<f64> {
    spectral::boundary_norm(g, s)
}

/// L² norm over the part of a boundary field restricted to a run of its nodes.
pub fn boundary_l2_on(g: &BoundaryField, run: &SubdomainWindow) -> f64 {
    let pos: std::collections::HashMap<usize, usize> =
        g.segment.node_ids.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    g.comps
        .iter()
        .map(|c| run.node_ids.iter().zip(&run.weights).map(|(n, w)| w * c[pos[n]] * c[pos[n]]).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}
