use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    Cg,
    Cholesky,
    Givens,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    /// CG iterations; 0 for direct solves.
    pub iterations: usize,
    pub relative_residual: f64,
    pub wall_ms: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix vs rhs {n}", a.nrows(), a.ncols())));
    }
    let start = Instant::now();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    let report = |it: usize, res: f64| SolveReport {
        method: SolveMethod::Cg,
        iterations: it,
        relative_residual: res,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    if bnorm == 0.0 {
        return Ok((x, report(0, 0.0)));
    }
    let mut inv_diag = vec![0.0; n];
    for (i, d) in inv_diag.iter_mut().enumerate() {
        let aii = a.get(i, i);
        if aii <= 0.0 {
            return Err(Error::IndefiniteDetected(0));
        }
        *d = 1.0 / aii;
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::IndefiniteDetected(it));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r) / bnorm;
        if !res.is_finite() {
            return Err(Error::IndefiniteDetected(it));
        }
        if res <= tol {
            // Confirm with the true residual to guard against recurrence drift.
            let ax = a.mul_vec(&x);
            let true_res = norm(&ax.iter().zip(b).map(|(u, v)| v - u).collect::<Vec<_>>()) / bnorm;
            if true_res <= tol {
                return Ok((x, report(it, true_res)));
            }
            r = ax.iter().zip(b).map(|(u, v)| v - u).collect();
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let ax = a.mul_vec(&x);
    let res = norm(&ax.iter().zip(b).map(|(u, v)| v - u).collect::<Vec<_>>()) / bnorm;
    Err(Error::NotConverged { iterations: max_iter, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_system() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let (x, rep) = cg_solve(&a, &[1.0; 5], 1e-12, 100).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - 1.0 / (i + 1) as f64).abs() < 1e-10);
        }
        assert!(rep.relative_residual <= 1e-12);
    }

    #[test]
    fn zero_matrix_rejected() {
        let a = SparseMatrix::zeros(3, 3);
        assert!(matches!(cg_solve(&a, &[1.0; 3], 1e-10, 10), Err(Error::IndefiniteDetected(_))));
    }

    #[test]
    fn indefinite_rejected() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(cg_solve(&a, &[1.0, -1.0], 1e-10, 10), Err(Error::IndefiniteDetected(_))));
    }

    #[test]
    fn iteration_cap() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t);
        assert!(matches!(cg_solve(&a, &vec![1.0; n], 1e-14, 3), Err(Error::NotConverged { .. })));
    }
}
