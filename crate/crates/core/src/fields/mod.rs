//! Grid functions, difference operators and discrete norms.

pub mod norms;
pub mod ops;
pub mod spectral;

use std::fmt::Write as _;
use std::sync::Arc;

use crate::mesh::{BoundarySegment, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.node_count(), "field length must match node count");
        ScalarField { grid, values }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::new(grid.clone(), vec![0.0; grid.node_count()])
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self::new(grid.clone(), vec![c; grid.node_count()])
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y)
            })
            .collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        ScalarField::new(self.grid.clone(), values)
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        ScalarField::new(self.grid.clone(), self.values.iter().map(|v| s * v).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max over interior nodes only.
    pub fn max_abs_interior(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.interior_mask)
            .filter(|(_, &i)| i)
            .fold(0.0, |m, (v, _)| m.max(v.abs()))
    }

    /// CSV with header `i,j,x,y,value`, rows in node order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,x,y,value\n");
        for (k, &(i, j)) in self.grid.nodes.iter().enumerate() {
            let (x, y) = self.grid.coords(k);
            let _ = writeln!(s, "{i},{j},{x:e},{y:e},{:e}", self.values[k]);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Self {
        assert!(Arc::ptr_eq(x.grid(), y.grid()) || x.grid() == y.grid());
        VectorField { x, y }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::new(ScalarField::zeros(grid), ScalarField::zeros(grid))
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        Self::new(ScalarField::from_fn(grid, |x, y| f(x, y)[0]), ScalarField::from_fn(grid, |x, y| f(x, y)[1]))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.x.grid()
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        if c == 0 { &self.x } else { &self.y }
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        VectorField::new(self.x.add(&o.x), self.y.add(&o.y))
    }

    pub fn sub(&self, o: &VectorField) -> VectorField {
        VectorField::new(self.x.sub(&o.x), self.y.sub(&o.y))
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField::new(self.x.scale(s), self.y.scale(s))
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.x.max_abs_interior().max(self.y.max_abs_interior())
    }

    /// CSV with header `i,j,x,y,vx,vy`, rows in node order.
    pub fn to_csv(&self) -> String {
        let grid = self.grid();
        let mut s = String::from("i,j,x,y,vx,vy\n");
        for (k, &(i, j)) in grid.nodes.iter().enumerate() {
            let (x, y) = grid.coords(k);
            let _ = writeln!(s, "{i},{j},{x:e},{y:e},{:e},{:e}", self.x.values[k], self.y.values[k]);
        }
        s
    }
}

/// Velocity-pressure pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesState {
    pub v: VectorField,
    pub p: ScalarField,
}

impl StokesState {
    pub fn new(v: VectorField, p: ScalarField) -> Self {
        StokesState { v, p }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::new(VectorField::zeros(grid), ScalarField::zeros(grid))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.p.grid()
    }

    /// Interleaved layout `[v₁, v₂, p]` per node.
    pub fn to_vector(&self) -> Vec<f64> {
        let n = self.grid().node_count();
        let mut out = Vec::with_capacity(3 * n);
        for k in 0..n {
            out.extend([self.v.x.values[k], self.v.y.values[k], self.p.values[k]]);
        }
        out
    }

    pub fn from_vector(grid: &Arc<Grid>, x: &[f64]) -> Self {
        let n = grid.node_count();
        assert_eq!(x.len(), 3 * n);
        let pick = |c: usize| ScalarField::new(grid.clone(), (0..n).map(|k| x[3 * k + c]).collect());
        Self::new(VectorField::new(pick(0), pick(1)), pick(2))
    }

    pub fn sub(&self, o: &StokesState) -> StokesState {
        Self::new(self.v.sub(&o.v), self.p.sub(&o.p))
    }

    pub fn add(&self, o: &StokesState) -> StokesState {
        Self::new(self.v.add(&o.v), self.p.add(&o.p))
    }

    pub fn scale(&self, s: f64) -> StokesState {
        Self::new(self.v.scale(s), self.p.scale(s))
    }
}

/// 2×2 tensor per node, `c[a][b][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub c: [[Vec<f64>; 2]; 2],
}

/// Scalar or 2-vector values on the nodes of one boundary segment.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub segment: Arc<BoundarySegment>,
    pub comps: Vec<Vec<f64>>,
}

impl BoundaryField {
    pub fn scalar(segment: Arc<BoundarySegment>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), segment.len());
        BoundaryField { segment, comps: vec![values] }
    }

    pub fn vector(segment: Arc<BoundarySegment>, x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), segment.len());
        assert_eq!(y.len(), segment.len());
        BoundaryField { segment, comps: vec![x, y] }
    }

    pub fn zeros_vector(segment: &Arc<BoundarySegment>) -> Self {
        let m = segment.len();
        Self::vector(segment.clone(), vec![0.0; m], vec![0.0; m])
    }

    /// Node-wise trace of a volume field.
    pub fn trace(y: &VectorField, segment: &Arc<BoundarySegment>) -> Self {
        let pick = |f: &ScalarField| segment.node_ids.iter().map(|&k| f.values[k]).collect();
        Self::vector(segment.clone(), pick(&y.x), pick(&y.y))
    }

    pub fn trace_scalar(u: &ScalarField, segment: &Arc<BoundarySegment>) -> Self {
        Self::scalar(segment.clone(), segment.node_ids.iter().map(|&k| u.values[k]).collect())
    }

    pub fn from_fn(segment: &Arc<BoundarySegment>, grid: &Grid, f: impl Fn(f64, f64, [f64; 2]) -> [f64; 2]) -> Self {
        let mut x = Vec::with_capacity(segment.len());
        let mut y = Vec::with_capacity(segment.len());
        for (k, &node) in segment.node_ids.iter().enumerate() {
            let (px, py) = grid.coords(node);
            let v = f(px, py, segment.outward_normal[k]);
            x.push(v[0]);
            y.push(v[1]);
        }
        Self::vector(segment.clone(), x, y)
    }

    pub fn len(&self) -> usize {
        self.segment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segment.is_empty()
    }

    fn zip(&self, o: &BoundaryField, f: impl Fn(f64, f64) -> f64) -> BoundaryField {
        assert_eq!(self.comps.len(), o.comps.len());
        let comps = self
            .comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        BoundaryField { segment: self.segment.clone(), comps }
    }

    pub fn add(&self, o: &BoundaryField) -> BoundaryField {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &BoundaryField) -> BoundaryField {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> BoundaryField {
        let comps = self.comps.iter().map(|c| c.iter().map(|v| s * v).collect()).collect();
        BoundaryField { segment: self.segment.clone(), comps }
    }

    /// Component-major stacking `[x₀..x_m, y₀..y_m]`.
    pub fn stacked(&self) -> Vec<f64> {
        self.comps.concat()
    }

    pub fn from_stacked(segment: &Arc<BoundarySegment>, v: &[f64]) -> Self {
        let m = segment.len();
        assert_eq!(v.len(), 2 * m);
        Self::vector(segment.clone(), v[..m].to_vec(), v[m..].to_vec())
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Viscosity and the two Oseen transport fields, with derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct OseenCoefficients {
    pub nu: f64,
    pub z1: VectorField,
    pub z2: VectorField,
    /// `max{1, ‖z₁‖_{L∞}, ‖∇z₂‖_{L⁴}}`.
    pub m_const: f64,
    /// `ln K = exp(m)`; `K = exp(exp(m))` itself overflows for moderate `m`.
    pub ln_k: f64,
}

impl OseenCoefficients {
    pub fn new(nu: f64, z1: VectorField, z2: VectorField) -> Self {
        assert!(nu > 0.0, "viscosity must be positive");
        let linf = (0..z1.grid().node_count())
            .map(|k| z1.x.values[k].hypot(z1.y.values[k]))
            .fold(0.0, f64::max);
        let g = ops::velocity_gradient(&z2);
        let grid = z2.grid();
        let l4 = (0..grid.node_count())
            .map(|k| {
                let f2: f64 = g.c.iter().flatten().map(|c| c[k] * c[k]).sum();
                grid.weights[k] * f2 * f2
            })
            .sum::<f64>()
            .powf(0.25);
        let m_const = 1.0f64.max(linf).max(l4);
        OseenCoefficients { nu, z1, z2, m_const, ln_k: m_const.exp() }
    }

    pub fn stokes(grid: &Arc<Grid>, nu: f64) -> Self {
        Self::new(nu, VectorField::zeros(grid), VectorField::zeros(grid))
    }

    pub fn k_const(&self) -> f64 {
        self.ln_k.exp()
    }

    pub fn is_stokes(&self) -> bool {
        self.z1.max_abs() == 0.0 && self.z2.max_abs() == 0.0
    }
}
