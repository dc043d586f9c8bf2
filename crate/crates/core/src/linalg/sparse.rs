use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Compressed sparse row matrix. Explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: vec![], values: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let rows = d.iter().enumerate().map(|(i, &v)| vec![(i, v)]).collect::<Vec<_>>();
        Self::from_rows(d.len(), rows)
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            rows[r].push((c, v));
        }
        Self::from_rows(ncols, rows)
    }

    /// Builds from per-row entry lists; each row is sorted and duplicates summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    debug_assert!(c < ncols);
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension");
        (0..self.nrows).map(|i| self.row_dot(i, x)).collect()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for k in 0..self.ncols {
            counts[k + 1] += counts[k];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                let slot = next[j];
                col_idx[slot] = i;
                values[slot] = a;
                next[j] += 1;
            }
        }
        SparseMatrix { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows, "matmul dimension");
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut rows = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            let mut touched = Vec::new();
            let (ci, vi) = self.row(i);
            for (&k, &a) in ci.iter().zip(vi) {
                let (ck, vk) = other.row(k);
                for (&j, &b) in ck.iter().zip(vk) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            rows.push(touched.iter().map(|&j| (j, acc[j])).collect());
        }
        Self::from_rows(other.ncols, rows)
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &SparseMatrix, b: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|i| {
                let (c1, v1) = self.row(i);
                let (c2, v2) = other.row(i);
                let mut r: Vec<(usize, f64)> = c1.iter().zip(v1).map(|(&j, &v)| (j, a * v)).collect();
                r.extend(c2.iter().zip(v2).map(|(&j, &v)| (j, b * v)));
                r
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    pub fn scale_rows(&self, w: &[f64]) -> SparseMatrix {
        assert_eq!(w.len(), self.nrows);
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= w[i];
            }
        }
        out.drop_zeros()
    }

    fn drop_zeros(self) -> SparseMatrix {
        if self.values.iter().all(|v| *v != 0.0) {
            return self;
        }
        let rows = (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| (j, a)).collect()
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let rs = rows
            .iter()
            .map(|&i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| (j, a)).collect()
            })
            .collect();
        Self::from_rows(self.ncols, rs)
    }

    /// Vertical concatenation.
    pub fn vstack(blocks: &[&SparseMatrix]) -> SparseMatrix {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut rows = Vec::new();
        for b in blocks {
            assert_eq!(b.ncols, ncols);
            for i in 0..b.nrows {
                let (c, v) = b.row(i);
                rows.push(c.iter().zip(v).map(|(&j, &a)| (j, a)).collect());
            }
        }
        Self::from_rows(ncols, rows)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                m[(i, j)] += a;
            }
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> SparseMatrix {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self::from_rows(m.ncols(), rows)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let t = self.transpose();
        let d = self.lin_comb(1.0, &t, -1.0);
        let scale = self.max_abs();
        if scale == 0.0 { 0.0 } else { d.max_abs() / scale }
    }

    /// MatrixMarket coordinate dump (general, real).
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                writeln!(out, "{} {} {:e}", i + 1, j + 1, a)?;
            }
        }
        Ok(())
    }
}

/// One weighted term `weight · ‖operator·x − target‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquaresTerm {
    pub name: String,
    pub operator: SparseMatrix,
    pub target: Vec<f64>,
    pub weight: f64,
}

impl LeastSquaresTerm {
    pub fn new(name: &str, operator: SparseMatrix, target: Vec<f64>, weight: f64) -> Self {
        LeastSquaresTerm { name: name.to_string(), operator, target, weight }
    }

    /// `weight · ‖T x − t‖²`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let r = self.operator.mul_vec(x);
        self.weight * r.iter().zip(&self.target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }
}

/// Normal equations `A = Σ w TᵀT`, `b = Σ w Tᵀt`, summed in term order.
pub fn assemble_normal(terms: &[LeastSquaresTerm]) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = match terms.first() {
        Some(t) => t.operator.ncols(),
        None => return Err(Error::DimensionMismatch("no terms".into())),
    };
    let mut a = SparseMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    for t in terms {
        if t.operator.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "term `{}` has {} columns, expected {n}",
                t.name,
                t.operator.ncols()
            )));
        }
        if t.operator.nrows() != t.target.len() {
            return Err(Error::DimensionMismatch(format!(
                "term `{}` has {} rows but target length {}",
                t.name,
                t.operator.nrows(),
                t.target.len()
            )));
        }
        if t.weight == 0.0 {
            continue;
        }
        let tt = t.operator.transpose();
        a = a.lin_comb(1.0, &tt.matmul(&t.operator), t.weight);
        let tb = tt.mul_vec(&t.target);
        for (bi, v) in b.iter_mut().zip(tb) {
            *bi += t.weight * v;
        }
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn transpose_and_matmul_match_dense() {
        let m = SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, -3.0), (2, 1, 4.0)]);
        let d = m.to_dense();
        assert_eq!(m.transpose().to_dense(), d.transpose());
        assert_eq!(m.transpose().matmul(&m).to_dense(), d.transpose() * &d);
    }

    #[test]
    fn identity_term() {
        let b0 = vec![1.0, -2.0, 3.0];
        let t = LeastSquaresTerm::new("id", SparseMatrix::identity(3), b0.clone(), 1.0);
        let (a, b) = assemble_normal(&[t]).unwrap();
        assert_eq!(a, SparseMatrix::identity(3));
        assert_eq!(b, b0);
    }

    #[test]
    fn half_weights_equal_unit_weight() {
        let op = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.5), (0, 2, -0.5), (1, 1, 2.0)]);
        let t = vec![0.3, -0.7];
        let one = LeastSquaresTerm::new("a", op.clone(), t.clone(), 1.0);
        let half = LeastSquaresTerm::new("a", op, t, 0.5);
        let (a1, b1) = assemble_normal(&[one]).unwrap();
        let (a2, b2) = assemble_normal(&[half.clone(), half]).unwrap();
        assert!(a1.lin_comb(1.0, &a2, -1.0).max_abs() <= 1e-14);
        for (x, y) in b1.iter().zip(&b2) {
            assert!((x - y).abs() <= 1e-14);
        }
    }

    #[test]
    fn mismatch_rejected() {
        let a = LeastSquaresTerm::new("a", SparseMatrix::identity(2), vec![0.0; 2], 1.0);
        let b = LeastSquaresTerm::new("b", SparseMatrix::identity(3), vec![0.0; 3], 1.0);
        assert!(matches!(assemble_normal(&[a, b]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn matrix_market_header() {
        let mut buf = Vec::new();
        SparseMatrix::identity(2).write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n"));
    }
}
