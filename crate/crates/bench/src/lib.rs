//! Shared fixtures for the solver benchmarks.

use cauchy_stokes_core::mesh::GAMMA_OBS;
use cauchy_stokes_core::{build_grid, catalog, make_cauchy_data, CauchyProblem, DomainKind};

/// MS2 Cauchy data on `gamma_obs` of the square annulus.
pub fn ms2_annulus(n: usize) -> CauchyProblem {
    let grid = build_grid(DomainKind::SquareAnnulus, n).expect("valid resolution");
    make_cauchy_data(&catalog("MS2").expect("catalog case"), &grid, GAMMA_OBS).expect("segment exists")
}
