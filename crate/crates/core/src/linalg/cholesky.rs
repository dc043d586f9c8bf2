use std::time::Instant;

use super::{SolveMethod, SolveReport, SparseMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Envelope (skyline) Cholesky factor `A = L Lᵀ`, dense inside each row profile.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// First stored column of each row of `L`.
    first: Vec<usize>,
    /// Offset of row `i` in `data`; row `i` holds columns `first[i]..=i`.
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        Self::with_cap(a, DEFAULT_DENSE_CAP)
    }

    /// Factors the lower triangle of the symmetric matrix `a`.
    pub fn with_cap(a: &SparseMatrix, cap: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("{}x{} is not square", n, a.ncols())));
        }
        if n > cap {
            return Err(Error::DimensionTooLarge { dim: n, cap });
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).0.iter().copied().find(|&j| j <= i).unwrap_or(i).min(i))
            .collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j <= i {
                    data[offset[i] + j - first[i]] = x;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let len = j - k0;
                let ri = offset[i] + k0 - fi;
                let rj = offset[j] + k0 - fj;
                let s: f64 = data[ri..ri + len].iter().zip(&data[rj..rj + len]).map(|(a, b)| a * b).sum();
                let idx = offset[i] + j - fi;
                if j < i {
                    data[idx] = (data[idx] - s) / data[offset[j] + j - fj];
                } else {
                    let d = data[idx] - s;
                    if !(d > 0.0) || !d.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: d });
                    }
                    data[idx] = d.sqrt();
                }
            }
        }
        Ok(CholeskyFactor { n, first, offset, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        if j < self.first[i] || j > i {
            0.0
        } else {
            self.data[self.offset[i] + j - self.first[i]]
        }
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&b[fi..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - s) / row[i - fi];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward(&self, y: &mut [f64]) {
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (yk, a) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= a * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rhs.iter().map(|b| self.solve(b)).collect()
    }

    /// Row `k` of `Lᵀ` as `(first column, values)`.
    pub fn transpose_rows(&self) -> Vec<(usize, Vec<f64>)> {
        let mut rows: Vec<Vec<f64>> = vec![Vec::new(); self.n];
        let mut last = vec![0usize; self.n];
        for i in 0..self.n {
            for j in self.first[i]..=i {
                if self.l(i, j) != 0.0 {
                    last[j] = last[j].max(i);
                }
            }
        }
        for (k, row) in rows.iter_mut().enumerate() {
            row.resize(last[k].max(k) - k + 1, 0.0);
        }
        for i in 0..self.n {
            for j in self.first[i]..=i {
                let v = self.l(i, j);
                if v != 0.0 {
                    rows[j][i - j] = v;
                }
            }
        }
        rows.into_iter().enumerate().collect()
    }
}

/// Cholesky solve of an SPD system; the factor can be kept for reuse.
pub fn dense_factor_solve(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, CholeskyFactor, SolveReport)> {
    let start = Instant::now();
    let f = CholeskyFactor::new(a)?;
    let x = f.solve(b);
    let ax = a.mul_vec(&x);
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rn = ax.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    let report = SolveReport {
        method: SolveMethod::Cholesky,
        iterations: 0,
        relative_residual: if bn == 0.0 { rn } else { rn / bn },
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((x, f, report))
}
