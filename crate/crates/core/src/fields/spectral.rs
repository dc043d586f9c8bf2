//! Fractional boundary norms from the eigenpairs of the 1D boundary Laplacian.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use super::BoundaryField;
use crate::error::{Error, Result};

/// Eigenpairs `K e = μ W e` with `W = diag(arclength weights)`, sorted by `μ`,
/// `e_k` orthonormal in the `W` inner product.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub mu: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Spectrum {
    /// Periodic second difference on closed loops (explicit Fourier modes),
    /// homogeneous Dirichlet second difference on open runs.
    pub fn build(weights: &[f64], h: f64, closed: bool) -> Self {
        if closed { Self::periodic(weights.len(), h) } else { Self::dirichlet(weights, h) }
    }

    fn periodic(m: usize, h: f64) -> Self {
        let len = m as f64 * h;
        let mut mu = vec![0.0];
        let mut basis = vec![vec![1.0 / len.sqrt(); m]];
        for k in 1..=m / 2 {
            let lam = 4.0 * (PI * k as f64 / m as f64).sin().powi(2) / (h * h);
            let theta = |i: usize| 2.0 * PI * (k * i % m) as f64 / m as f64;
            if 2 * k == m {
                mu.push(lam);
                basis.push((0..m).map(|i| theta(i).cos() / len.sqrt()).collect());
            } else {
                let s = (2.0 / len).sqrt();
                mu.push(lam);
                basis.push((0..m).map(|i| s * theta(i).cos()).collect());
                mu.push(lam);
                basis.push((0..m).map(|i| s * theta(i).sin()).collect());
            }
        }
        Spectrum { mu, basis, weights: vec![h; m] }
    }

    fn dirichlet(weights: &[f64], h: f64) -> Self {
        let m = weights.len();
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            a[(i, i)] = 2.0 / h / weights[i];
            if i + 1 < m {
                let v = -1.0 / h / (weights[i] * weights[i + 1]).sqrt();
                a[(i, i + 1)] = v;
                a[(i + 1, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
        let mut mu = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for k in order {
            mu.push(eig.eigenvalues[k].max(0.0));
            let col = eig.eigenvectors.column(k);
            // Fix the sign so the first nonzero entry is positive.
            let sign = col.iter().find(|v| v.abs() > 1e-12).map_or(1.0, |v| v.signum());
            basis.push((0..m).map(|i| sign * col[i] / weights[i].sqrt()).collect());
        }
        Spectrum { mu, basis, weights: weights.to_vec() }
    }

    /// `⟨g, e_k⟩_W` for every `k`.
    pub fn coefficients(&self, g: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|e| e.iter().zip(g).zip(&self.weights).map(|((e, g), w)| w * e * g).sum())
            .collect()
    }
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if [0.0, 0.5, 1.0, 1.5].contains(&s) {
        Ok(())
    } else {
        Err(Error::OrderNotSupported(s))
    }
}

/// `‖g‖²_{H^s} = Σ_k (1+μ_k)^s ⟨g, e_k⟩²`, summed over components.
pub fn boundary_norm(g: &BoundaryField, s: f64) -> Result<f64> {
    check_order(s)?;
    let sp = g.segment.spectrum();
    let total: f64 = g
        .comps
        .iter()
        .map(|c| {
            sp.coefficients(c)
                .iter()
                .zip(&sp.mu)
                .map(|(a, mu)| (1.0 + mu).powf(s) * a * a)
                .sum::<f64>()
        })
        .sum();
    Ok(total.sqrt())
}

/// Spectrum of an arbitrary segment, exposed for noise generation and tests.
pub fn spectrum_of(segment: &crate::mesh::BoundarySegment) -> &Spectrum {
    segment.spectrum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::norms::boundary_l2;
    use crate::mesh::{build_grid, DomainKind, GAMMA_C, GAMMA_OBS};

    /// Dense generalized eigenproblem solved directly, as an independent oracle.
    fn oracle_eigs(weights: &[f64], h: f64, closed: bool) -> Vec<f64> {
        let m = weights.len();
        let mut k = DMatrix::zeros(m, m);
        for i in 0..m {
            k[(i, i)] = 2.0 / h;
            let j = (i + 1) % m;
            if i + 1 < m || closed {
                k[(i, j)] -= 1.0 / h;
                k[(j, i)] -= 1.0 / h;
            }
        }
        let winv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m, weights.iter().map(|w| 1.0 / w.sqrt())));
        let mut ev: Vec<f64> = SymmetricEigen::new(&winv * k * &winv).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn eigenvalues_match_dense_oracle() {
        let g = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
        for name in [GAMMA_C, GAMMA_OBS] {
            let seg = g.segment(name).unwrap();
            let sp = seg.spectrum();
            let ev = oracle_eigs(&seg.arclength_weights, seg.h, seg.closed);
            for (a, b) in sp.mu.iter().zip(&ev) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
        let sq = build_grid(DomainKind::UnitSquare, 8).unwrap();
        let seg = sq.segment(GAMMA_OBS).unwrap();
        let ev = oracle_eigs(&seg.arclength_weights, seg.h, false);
        for (a, b) in seg.spectrum().mu.iter().zip(&ev) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn basis_is_weighted_orthonormal() {
        for (kind, name) in [(DomainKind::SquareAnnulus, GAMMA_C), (DomainKind::UnitSquare, GAMMA_C)] {
            let g = build_grid(kind, 16).unwrap();
            let seg = g.segment(name).unwrap();
            let sp = seg.spectrum();
            for a in 0..sp.basis.len() {
                for b in 0..sp.basis.len() {
                    let ip: f64 = (0..seg.len()).map(|i| sp.weights[i] * sp.basis[a][i] * sp.basis[b][i]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn lowest_mode_ratio() {
        let g = build_grid(DomainKind::SquareAnnulus, 16).unwrap();
        let seg = g.segment(GAMMA_C).unwrap();
        let m = seg.len();
        let mu1 = 4.0 * (PI / m as f64).sin().powi(2) / (seg.h * seg.h);
        let vals: Vec<f64> = (0..m).map(|i| (2.0 * PI * i as f64 / m as f64).cos()).collect();
        let f = BoundaryField::scalar(seg.clone(), vals);
        let r = boundary_norm(&f, 0.5).unwrap() / boundary_norm(&f, 0.0).unwrap();
        assert!((r - (1.0 + mu1).powf(0.25)).abs() < 1e-12);
        let one = BoundaryField::scalar(seg.clone(), vec![1.0; m]);
        assert!((boundary_norm(&one, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((boundary_norm(&f, 0.0).unwrap() - boundary_l2(&f)).abs() < 1e-10);
        assert!(matches!(boundary_norm(&f, 2.0), Err(Error::OrderNotSupported(_))));
    }
}
