//! Elimination of prescribed unknowns and the two factorization paths.

use crate::error::Result;
use crate::linalg::{assemble_normal, factor_rows, BandedQr, CholeskyFactor, LeastSquaresTerm, SparseMatrix, SparseRow};

/// Splits the full state into free unknowns and prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct UnknownMap {
    pub n_full: usize,
    pub free: Vec<usize>,
    /// Position of each full index among the free unknowns.
    pub slot: Vec<Option<usize>>,
    /// Prescribed values on fixed indices, zero on free ones.
    pub fixed_values: Vec<f64>,
}

impl UnknownMap {
    pub fn new(n_full: usize, fixed: &[usize], values: &[f64]) -> Self {
        let mut fixed_values = vec![0.0; n_full];
        let mut is_fixed = vec![false; n_full];
        for (&i, &v) in fixed.iter().zip(values) {
            is_fixed[i] = true;
            fixed_values[i] = v;
        }
        let free: Vec<usize> = (0..n_full).filter(|&i| !is_fixed[i]).collect();
        let mut slot = vec![None; n_full];
        for (k, &i) in free.iter().enumerate() {
            slot[i] = Some(k);
        }
        UnknownMap { n_full, free, slot, fixed_values }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn with_values(&self, fixed: &[usize], values: &[f64]) -> Self {
        let mut m = self.clone();
        m.fixed_values.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &v) in fixed.iter().zip(values) {
            m.fixed_values[i] = v;
        }
        m
    }

    pub fn expand(&self, x_free: &[f64]) -> Vec<f64> {
        let mut x = self.fixed_values.clone();
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = x_free[k];
        }
        x
    }

    pub fn restrict_vec(&self, x: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| x[i]).collect()
    }

    pub fn restrict_operator(&self, op: &SparseMatrix) -> SparseMatrix {
        let rows = (0..op.nrows())
            .map(|r| {
                let (c, v) = op.row(r);
                c.iter().zip(v).filter_map(|(&j, &a)| self.slot[j].map(|s| (s, a))).collect()
            })
            .collect();
        SparseMatrix::from_rows(self.n_free(), rows)
    }

    /// `w‖T x − t‖²` over the free unknowns: `T_free`, `t − T x_fixed`.
    pub fn restrict(&self, term: &LeastSquaresTerm) -> LeastSquaresTerm {
        let shift = term.operator.mul_vec(&self.fixed_values);
        let target = term.target.iter().zip(shift).map(|(t, s)| t - s).collect();
        LeastSquaresTerm {
            name: term.name.clone(),
            operator: self.restrict_operator(&term.operator),
            target,
            weight: term.weight,
        }
    }
}

/// Weighted rows of the given (already restricted) terms, for Givens absorption.
pub fn weighted_rows(terms: &[LeastSquaresTerm]) -> Vec<SparseRow> {
    let mut rows = Vec::new();
    for t in terms {
        let s = t.weight.sqrt();
        for r in 0..t.operator.nrows() {
            let (c, v) = t.operator.row(r);
            if c.is_empty() {
                continue;
            }
            rows.push((c.to_vec(), v.iter().map(|a| s * a).collect(), s * t.target[r]));
        }
    }
    rows
}

pub fn givens_factor(n: usize, terms: &[LeastSquaresTerm]) -> BandedQr {
    factor_rows(n, weighted_rows(terms))
}

/// Solves `min ‖R_T x − d_T‖² + ε‖Lᵀx − c‖²` by one more banded QR sweep.
pub fn combine_and_solve(rt: &BandedQr, lt_rows: &[(usize, Vec<f64>)], c: &[f64], eps: f64) -> Result<Vec<f64>> {
    let n = rt.dim();
    let bw_g = lt_rows.iter().map(|(_, v)| v.len().saturating_sub(1)).max().unwrap_or(0);
    let mut qr = BandedQr::new(n, rt.bandwidth().max(bw_g));
    let s = eps.sqrt();
    let mut scaled = Vec::new();
    for k in 0..n {
        if let Some((row, rhs)) = rt.row(k) {
            let len = row.iter().rposition(|v| *v != 0.0).map_or(0, |p| p + 1);
            qr.absorb(k, &row[..len], rhs);
        }
        let (first, vals) = &lt_rows[k];
        scaled.clear();
        scaled.extend(vals.iter().map(|v| s * v));
        qr.absorb(*first, &scaled, s * c[k]);
    }
    qr.solve()
}

/// Cholesky-factored normal equations of a fixed operator with variable data.
#[derive(Debug, Clone)]
pub struct FactoredSystem {
    pub map: UnknownMap,
    ops: Vec<(SparseMatrix, SparseMatrix, f64)>,
    pub matrix: SparseMatrix,
    pub factor: CholeskyFactor,
}

impl FactoredSystem {
    /// `terms` act on the full state; their targets are ignored here.
    pub fn new(terms: &[LeastSquaresTerm], map: UnknownMap) -> Result<Self> {
        let restricted: Vec<LeastSquaresTerm> = terms.iter().map(|t| map.restrict(t)).collect();
        let (matrix, _) = assemble_normal(&restricted)?;
        let factor = CholeskyFactor::new(&matrix)?;
        let ops = terms
            .iter()
            .zip(&restricted)
            .map(|(t, r)| (t.operator.clone(), r.operator.transpose(), t.weight))
            .collect();
        Ok(FactoredSystem { map, ops, matrix, factor })
    }

    /// Full state vector for term targets `targets` and fixed values `fixed`.
    pub fn solve(&self, targets: &[&[f64]], fixed: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.map.n_free()];
        for ((full, free_t, w), t) in self.ops.iter().zip(targets) {
            let shift = full.mul_vec(fixed);
            let r: Vec<f64> = t.iter().zip(shift).map(|(a, s)| a - s).collect();
            for (bi, v) in b.iter_mut().zip(free_t.mul_vec(&r)) {
                *bi += w * v;
            }
        }
        let x = self.factor.solve(&b);
        let mut full = fixed.to_vec();
        for (k, &i) in self.map.free.iter().enumerate() {
            full[i] = x[k];
        }
        full
    }
}
