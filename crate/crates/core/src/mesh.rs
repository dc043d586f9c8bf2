//! Structured grids over the unit square and the square annulus.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ops::Operators;
use crate::fields::spectral::Spectrum;

pub const GAMMA_OBS: &str = "gamma_obs";
pub const GAMMA_C: &str = "gamma_c";
pub const GAMMA_0: &str = "gamma_0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainKind {
    UnitSquare,
    /// `[0,1]²` minus the open square `(3/8,5/8)²`.
    SquareAnnulus,
}

impl DomainKind {
    pub fn area(self) -> f64 {
        match self {
            DomainKind::UnitSquare => 1.0,
            DomainKind::SquareAnnulus => 15.0 / 16.0,
        }
    }
}

/// Ordered run of boundary nodes with normals and arclength weights.
#[derive(Debug)]
pub struct BoundarySegment {
    pub name: String,
    pub node_ids: Vec<usize>,
    /// Unit outward normal per node. Corners inside a segment get the
    /// normalized sum of the two edge normals.
    pub outward_normal: Vec<[f64; 2]>,
    /// Axis-aligned normals of the edges touching each node (one or two).
    pub edge_normals: Vec<Vec<[f64; 2]>>,
    pub arclength_weights: Vec<f64>,
    pub closed: bool,
    pub h: f64,
    spectrum: OnceLock<Spectrum>,
}

impl PartialEq for BoundarySegment {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.node_ids == other.node_ids && self.h == other.h
    }
}

impl BoundarySegment {
    fn new(
        name: &str,
        node_ids: Vec<usize>,
        edge_normals: Vec<Vec<[f64; 2]>>,
        closed: bool,
        h: f64,
    ) -> Self {
        let m = node_ids.len();
        let outward_normal = edge_normals
            .iter()
            .map(|ns| {
                let (sx, sy) = ns.iter().fold((0.0, 0.0), |(a, b), n| (a + n[0], b + n[1]));
                let len = (sx * sx + sy * sy).sqrt();
                [sx / len, sy / len]
            })
            .collect();
        let mut arclength_weights = vec![h; m];
        if !closed {
            arclength_weights[0] = 0.5 * h;
            arclength_weights[m - 1] = 0.5 * h;
        }
        BoundarySegment {
            name: name.to_string(),
            node_ids,
            outward_normal,
            edge_normals,
            arclength_weights,
            closed,
            h,
            spectrum: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.arclength_weights.iter().sum()
    }

    /// Arclength position of node `k` measured from the first node.
    pub fn arclength(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub(crate) fn spectrum(&self) -> &Spectrum {
        self.spectrum
            .get_or_init(|| Spectrum::build(&self.arclength_weights, self.h, self.closed))
    }
}

/// A rectangular subdomain window or a contiguous run of boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowShape {
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Run { segment: String, start: f64, end: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainWindow {
    pub shape: WindowShape,
    pub node_ids: Vec<usize>,
    /// Trapezoid weights: area weights for rectangles, arclength for runs.
    pub weights: Vec<f64>,
    /// Only meaningful for runs: the run wraps a whole closed segment.
    pub closed: bool,
}

impl SubdomainWindow {
    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug)]
pub struct Grid {
    pub kind: DomainKind,
    pub n: usize,
    pub h: f64,
    /// Lattice coordinates `(i, j)` of each node, `j` outer and `i` inner.
    pub nodes: Vec<(usize, usize)>,
    pub interior_mask: Vec<bool>,
    /// Trapezoid quadrature weight of each node.
    pub weights: Vec<f64>,
    pub boundary_segments: BTreeMap<String, Arc<BoundarySegment>>,
    lattice: Vec<usize>,
    ops: OnceLock<Operators>,
}

const NONE: usize = usize::MAX;

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.n == other.n
    }
}

fn in_hole(n: usize, i: usize, j: usize) -> bool {
    let (a, b) = (3 * n / 8, 5 * n / 8);
    i > a && i < b && j > a && j < b
}

fn cell_in_domain(kind: DomainKind, n: usize, ci: usize, cj: usize) -> bool {
    match kind {
        DomainKind::UnitSquare => true,
        DomainKind::SquareAnnulus => {
            let (a, b) = (3 * n / 8, 5 * n / 8);
            !(ci >= a && ci < b && cj >= a && cj < b)
        }
    }
}

pub fn build_grid(kind: DomainKind, n: usize) -> Result<Arc<Grid>> {
    if n < 8 {
        return Err(Error::ResolutionTooSmall(n));
    }
    if kind == DomainKind::SquareAnnulus && !n.is_multiple_of(8) {
        return Err(Error::ResolutionNotDivisible(n));
    }
    let h = 1.0 / n as f64;
    let side = n + 1;
    let mut lattice = vec![NONE; side * side];
    let mut nodes = Vec::with_capacity(side * side);
    let mut weights = Vec::with_capacity(side * side);
    let mut interior_mask = Vec::with_capacity(side * side);
    for j in 0..=n {
        for i in 0..=n {
            if kind == DomainKind::SquareAnnulus && in_hole(n, i, j) {
                continue;
            }
            lattice[j * side + i] = nodes.len();
            nodes.push((i, j));
            let mut cells = 0;
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                if i + 1 > di && j + 1 > dj && i - di < n && j - dj < n {
                    let (ci, cj) = (i - di, j - dj);
                    if cell_in_domain(kind, n, ci, cj) {
                        cells += 1;
                    }
                }
            }
            weights.push(0.25 * h * h * cells as f64);
            interior_mask.push(cells == 4);
        }
    }

    let id = |i: usize, j: usize| lattice[j * side + i];
    let mut segments = BTreeMap::new();
    let (s, e, no, w) = ([0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]);
    match kind {
        DomainKind::UnitSquare => {
            let west: Vec<usize> = (0..=n).map(|j| id(0, j)).collect();
            let west_normals = vec![vec![w]; n + 1];
            segments.insert(
                GAMMA_OBS.to_string(),
                Arc::new(BoundarySegment::new(GAMMA_OBS, west, west_normals, false, h)),
            );
            let mut ids = Vec::new();
            let mut normals = Vec::new();
            for i in 0..=n {
                ids.push(id(i, 0));
                normals.push(if i == n { vec![s, e] } else { vec![s] });
            }
            for j in 1..=n {
                ids.push(id(n, j));
                normals.push(if j == n { vec![e, no] } else { vec![e] });
            }
            for i in (0..n).rev() {
                ids.push(id(i, n));
                normals.push(vec![no]);
            }
            segments.insert(
                GAMMA_C.to_string(),
                Arc::new(BoundarySegment::new(GAMMA_C, ids, normals, false, h)),
            );
        }
        DomainKind::SquareAnnulus => {
            let (ids, normals) = square_loop(0, n, [s, e, no, w], &id);
            segments.insert(
                GAMMA_OBS.to_string(),
                Arc::new(BoundarySegment::new(GAMMA_OBS, ids, normals, true, h)),
            );
            // Inner rim: outward from the fluid means pointing into the hole.
            let (ids, normals) = square_loop(3 * n / 8, 5 * n / 8, [no, w, s, e], &id);
            let inner = Arc::new(BoundarySegment::new(GAMMA_C, ids.clone(), normals.clone(), true, h));
            segments.insert(GAMMA_C.to_string(), inner);
            segments.insert(
                GAMMA_0.to_string(),
                Arc::new(BoundarySegment::new(GAMMA_0, ids, normals, true, h)),
            );
        }
    }

    Ok(Arc::new(Grid {
        kind,
        n,
        h,
        nodes,
        interior_mask,
        weights,
        boundary_segments: segments,
        lattice,
        ops: OnceLock::new(),
    }))
}

/// Counterclockwise loop around the lattice square `[a, b]²` starting at
/// `(a, a)`; `normals` lists the normal of the bottom, right, top and left edge.
fn square_loop(
    a: usize,
    b: usize,
    normals: [[f64; 2]; 4],
    id: &dyn Fn(usize, usize) -> usize,
) -> (Vec<usize>, Vec<Vec<[f64; 2]>>) {
    let [bottom, right, top, left] = normals;
    let mut ids = Vec::new();
    let mut ns = Vec::new();
    for i in a..b {
        ids.push(id(i, a));
        ns.push(if i == a { vec![left, bottom] } else { vec![bottom] });
    }
    for j in a..b {
        ids.push(id(b, j));
        ns.push(if j == a { vec![bottom, right] } else { vec![right] });
    }
    for i in (a + 1..=b).rev() {
        ids.push(id(i, b));
        ns.push(if i == b { vec![right, top] } else { vec![top] });
    }
    for j in (a + 1..=b).rev() {
        ids.push(id(a, j));
        ns.push(if j == b { vec![top, left] } else { vec![left] });
    }
    (ids, ns)
}

impl Grid {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node index at lattice point `(i, j)`, if it lies in the closed domain.
    pub fn node_at(&self, i: isize, j: isize) -> Option<usize> {
        let n = self.n as isize;
        if i < 0 || j < 0 || i > n || j > n {
            return None;
        }
        let k = self.lattice[j as usize * (self.n + 1) + i as usize];
        (k != NONE).then_some(k)
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.nodes[node];
        (i as f64 * self.h, j as f64 * self.h)
    }

    pub fn segment(&self, name: &str) -> Result<&Arc<BoundarySegment>> {
        self.boundary_segments
            .get(name)
            .ok_or_else(|| Error::UnknownSegment(name.to_string()))
    }

    pub fn boundary_node_count(&self) -> usize {
        self.interior_mask.iter().filter(|b| !**b).count()
    }

    pub fn ops(&self) -> &Operators {
        self.ops.get_or_init(|| Operators::build(self))
    }

    /// Rectangular window `[x0,x1]×[y0,y1]` whose closure lies in the open domain.
    pub fn window(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<SubdomainWindow> {
        let n = self.n as f64;
        let snap = |v: f64| -> Option<isize> {
            let r = (v * n).round();
            ((v * n - r).abs() < 1e-9).then_some(r as isize)
        };
        let (i0, i1, j0, j1) = match (snap(x0), snap(x1), snap(y0), snap(y1)) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => return Err(Error::RectEmpty),
        };
        if i0 >= i1 || j0 >= j1 {
            return Err(Error::RectEmpty);
        }
        let mut node_ids = Vec::new();
        let mut weights = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                match self.node_at(i, j) {
                    Some(k) if self.interior_mask[k] => {
                        let wx = if i == i0 || i == i1 { 0.5 } else { 1.0 };
                        let wy = if j == j0 || j == j1 { 0.5 } else { 1.0 };
                        node_ids.push(k);
                        weights.push(wx * wy * self.h * self.h);
                    }
                    _ => return Err(Error::RectTouchesBoundary),
                }
            }
        }
        Ok(SubdomainWindow {
            shape: WindowShape::Rect { x0, x1, y0, y1 },
            node_ids,
            weights,
            closed: false,
        })
    }
}

/// Contiguous run of `segment` between two arclength fractions (inclusive).
pub fn boundary_run(segment: &BoundarySegment, start: f64, end: f64) -> Result<SubdomainWindow> {
    if !(0.0..1.0).contains(&start) || end <= start || end > 1.0 {
        return Err(Error::EmptyRun { start, end });
    }
    let total = segment.length();
    let m = segment.len();
    let tol = 1e-12 * total;
    let mut picks: Vec<usize> = (0..m)
        .filter(|&k| {
            let s = segment.arclength(k);
            s >= start * total - tol && s <= end * total + tol
        })
        .collect();
    if picks.is_empty() {
        return Err(Error::EmptyRun { start, end });
    }
    let wraps = segment.closed && picks.len() == m;
    if segment.closed && !wraps && end == 1.0 && picks[0] != 0 {
        // The endpoint s = L coincides with node 0 on a closed loop.
        picks.push(0);
    }
    let h = segment.h;
    let count = picks.len();
    let weights = (0..count)
        .map(|k| if !wraps && (k == 0 || k + 1 == count) { 0.5 * h } else { h })
        .collect::<Vec<_>>();
    let weights = if count == 1 { vec![0.0] } else { weights };
    Ok(SubdomainWindow {
        shape: WindowShape::Run { segment: segment.name.clone(), start, end },
        node_ids: picks.iter().map(|&k| segment.node_ids[k]).collect(),
        weights,
        closed: wraps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let g = build_grid(DomainKind::UnitSquare, 8).unwrap();
        assert_eq!(g.node_count(), 81);
        assert_eq!(g.boundary_node_count(), 32);
        assert_eq!(g.segment(GAMMA_OBS).unwrap().len(), 9);
        assert_eq!(g.segment(GAMMA_C).unwrap().len(), 25);
    }

    #[test]
    fn annulus_counts() {
        let g = build_grid(DomainKind::SquareAnnulus, 8).unwrap();
        assert_eq!(g.segment(GAMMA_OBS).unwrap().len(), 32);
        assert_eq!(g.segment(GAMMA_C).unwrap().len(), 8);
        assert_eq!(g.boundary_node_count(), 40);
        // 81 lattice points minus the single hole point (4,4).
        assert_eq!(g.node_count(), 80);
    }

    #[test]
    fn resolution_errors() {
        assert_eq!(
            build_grid(DomainKind::SquareAnnulus, 12).unwrap_err(),
            Error::ResolutionNotDivisible(12)
        );
        assert_eq!(build_grid(DomainKind::UnitSquare, 4).unwrap_err(), Error::ResolutionTooSmall(4));
    }

    #[test]
    fn quadrature_sums_to_area() {
        for (kind, n) in [(DomainKind::UnitSquare, 9), (DomainKind::SquareAnnulus, 16)] {
            let g = build_grid(kind, n).unwrap();
            let a: f64 = g.weights.iter().sum();
            assert!((a - kind.area()).abs() < 1e-12);
        }
    }

    #[test]
    fn windows() {
        let g = build_grid(DomainKind::UnitSquare, 8).unwrap();
        assert_eq!(g.window(0.25, 0.5, 0.25, 0.5).unwrap().len(), 9);
        assert_eq!(g.window(0.0, 0.5, 0.0, 0.5).unwrap_err(), Error::RectTouchesBoundary);
        assert_eq!(g.window(0.5, 0.5, 0.2, 0.5).unwrap_err(), Error::RectEmpty);
        let a = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
        let w = a.window(0.0625, 0.1875, 0.0625, 0.1875).unwrap();
        assert_eq!(w.len(), 9);
        assert!((w.measure() - 0.125 * 0.125).abs() < 1e-15);
        assert_eq!(a.window(0.25, 0.5, 0.25, 0.5).unwrap_err(), Error::RectTouchesBoundary);
    }

    #[test]
    fn runs() {
        let g = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
        let rim = g.segment(GAMMA_0).unwrap();
        let all = boundary_run(rim, 0.0, 1.0).unwrap();
        assert_eq!(all.len(), rim.len());
        assert!(all.closed);
        let q = boundary_run(rim, 0.0, 0.25).unwrap();
        assert!((q.len() as isize - 4).abs() <= 1);
        assert!((q.measure() - 0.25).abs() < 1e-12);
        assert!(matches!(boundary_run(rim, 0.5, 0.5), Err(Error::EmptyRun { .. })));
    }

    #[test]
    fn corner_normals() {
        let g = build_grid(DomainKind::SquareAnnulus, 8).unwrap();
        let rim = g.segment(GAMMA_C).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(g.nodes[rim.node_ids[0]], (3, 3));
        assert!((rim.outward_normal[0][0] - r).abs() < 1e-15);
        assert!((rim.outward_normal[0][1] - r).abs() < 1e-15);
        assert_eq!(rim.outward_normal[1], [0.0, 1.0]);
        let sq = build_grid(DomainKind::UnitSquare, 8).unwrap();
        let c = sq.segment(GAMMA_C).unwrap();
        assert_eq!(c.outward_normal[0], [0.0, -1.0]);
        assert_eq!(*c.outward_normal.last().unwrap(), [0.0, 1.0]);
    }
}
