use crate::error::{Error, Result};

/// Banded upper-triangular factor built by Givens rotations.
///
/// Rows are absorbed one at a time; each must start at or after the first
/// column of every previously absorbed row (rows sorted by first column), which
/// keeps every fill-in inside `bandwidth` columns right of the diagonal.
#[derive(Debug, Clone)]
pub struct BandedQr {
    n: usize,
    bw: usize,
    r: Vec<f64>,
    rhs: Vec<f64>,
    occupied: Vec<bool>,
    residual_sq: f64,
    work: Vec<f64>,
    last_first: usize,
}

impl BandedQr {
    pub fn new(n: usize, bandwidth: usize) -> Self {
        BandedQr {
            n,
            bw: bandwidth,
            r: vec![0.0; n * (bandwidth + 1)],
            rhs: vec![0.0; n],
            occupied: vec![false; n],
            residual_sq: 0.0,
            work: vec![0.0; bandwidth + 1],
            last_first: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Squared norm of the part of the right-hand side outside the range.
    pub fn residual_sq(&self) -> f64 {
        self.residual_sq
    }

    /// Absorbs the row `vals` (dense from column `first`) with right-hand side `beta`.
    pub fn absorb(&mut self, first: usize, vals: &[f64], mut beta: f64) {
        assert!(vals.len() <= self.bw + 1, "row wider than bandwidth");
        assert!(first >= self.last_first, "rows must be sorted by first column");
        self.last_first = first;
        let w = self.bw + 1;
        let work = &mut self.work;
        work[..vals.len()].copy_from_slice(vals);
        work[vals.len()..].fill(0.0);
        let end = (first + w).min(self.n);
        for k in first..end {
            let off = k - first;
            let a = work[off];
            if a == 0.0 {
                continue;
            }
            let row = &mut self.r[k * w..(k + 1) * w];
            if !self.occupied[k] {
                let len = w - off;
                row[..len].copy_from_slice(&work[off..]);
                row[len..].fill(0.0);
                self.rhs[k] = beta;
                self.occupied[k] = true;
                return;
            }
            let rkk = row[0];
            let rr = rkk.hypot(a);
            let (c, s) = (rkk / rr, a / rr);
            row[0] = rr;
            work[off] = 0.0;
            let len = w - off;
            for (x, y) in row[1..len].iter_mut().zip(work[off + 1..].iter_mut()) {
                let (u, v) = (*x, *y);
                *x = c * u + s * v;
                *y = c * v - s * u;
            }
            let (u, v) = (self.rhs[k], beta);
            self.rhs[k] = c * u + s * v;
            beta = c * v - s * u;
        }
        self.residual_sq += beta * beta;
    }

    /// Stored row `k` of `R` (dense from the diagonal) and its right-hand side.
    pub fn row(&self, k: usize) -> Option<(&[f64], f64)> {
        let w = self.bw + 1;
        self.occupied[k].then(|| (&self.r[k * w..(k + 1) * w], self.rhs[k]))
    }

    /// Back substitution `R x = rhs`.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let w = self.bw + 1;
        let mut x = vec![0.0; self.n];
        for k in (0..self.n).rev() {
            if !self.occupied[k] {
                return Err(Error::SingularSystem(k));
            }
            let row = &self.r[k * w..(k + 1) * w];
            let len = w.min(self.n - k);
            let s: f64 = row[1..len].iter().zip(&x[k + 1..k + len]).map(|(a, b)| a * b).sum();
            x[k] = (self.rhs[k] - s) / row[0];
        }
        Ok(x)
    }
}

/// Sparse row for absorption: `(column indices ascending, values, rhs)`.
pub type SparseRow = (Vec<usize>, Vec<f64>, f64);

/// Factors the least-squares problem `min Σ (row·x − rhs)²`.
pub fn factor_rows(n: usize, mut rows: Vec<SparseRow>) -> BandedQr {
    rows.retain(|r| !r.0.is_empty());
    rows.sort_by_key(|r| r.0[0]);
    let bw = rows.iter().map(|r| r.0[r.0.len() - 1] - r.0[0]).max().unwrap_or(0);
    let mut qr = BandedQr::new(n, bw);
    let mut dense = vec![0.0; bw + 1];
    for (cols, vals, b) in rows {
        let f = cols[0];
        let len = cols[cols.len() - 1] - f + 1;
        dense[..len].fill(0.0);
        for (c, v) in cols.iter().zip(&vals) {
            dense[c - f] += v;
        }
        qr.absorb(f, &dense[..len], b);
    }
    qr
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn matches_dense_least_squares() {
        // Tall banded system, compared against nalgebra's SVD solve.
        let n = 12;
        let mut rows = Vec::new();
        let mut a = DMatrix::zeros(3 * n, n);
        let mut b = DVector::zeros(3 * n);
        let mut r = 0;
        for k in 0..n {
            for shift in 0..3 {
                let cols: Vec<usize> = (k..(k + 3).min(n)).collect();
                let vals: Vec<f64> = cols.iter().map(|&c| ((c * 7 + shift * 3 + k) % 5) as f64 - 1.7).collect();
                let rhs = (r as f64 * 0.37).sin();
                for (c, v) in cols.iter().zip(&vals) {
                    a[(r, *c)] = *v;
                }
                b[r] = rhs;
                rows.push((cols, vals, rhs));
                r += 1;
            }
        }
        let qr = factor_rows(n, rows);
        let x = qr.solve().unwrap();
        let oracle = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() < 1e-10);
        }
        let res = (&a * DVector::from_vec(x) - &b).norm_squared();
        assert!((res - qr.residual_sq()).abs() < 1e-10);
    }

    #[test]
    fn rank_deficiency_reported() {
        let rows = vec![(vec![0], vec![1.0], 1.0)];
        assert!(matches!(factor_rows(2, rows).solve(), Err(Error::SingularSystem(1))));
    }
}
