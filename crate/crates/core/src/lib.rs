//! Cauchy data completion for the 2D Stokes/Oseen equations.
//!
//! Two regularizations are provided: quasi-reversibility ([`qr`]) and a
//! penalized Kohn-Vogelius functional ([`kv`]). Both work on finite-difference
//! grids from [`mesh`] and are exercised against closed-form solutions from
//! [`manufactured`] by the experiment drivers in [`studies`].

pub mod error;
pub mod fields;
pub mod kv;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod qr;
pub mod studies;

pub use error::{Error, Result};
pub use fields::{BoundaryField, OseenCoefficients, ScalarField, StokesState, TensorField, VectorField};
pub use mesh::{build_grid, boundary_run, BoundarySegment, DomainKind, Grid, SubdomainWindow};
pub use kv::{kv_gradient_check, kv_value, minimize_kv, solve_forward_phi, solve_forward_psi, KvSolution, KvUnknown};
pub use manufactured::{catalog, make_cauchy_data, CaseName, ManufacturedCase, NoiseModel, NoiseTarget};
pub use qr::{solve_qr, solve_qr_cg, solve_qr_interior, CauchyProblem, QrSolution, QrSolver};
pub use studies::{Method, ProbeMode, StudyKind, StudyReport, StudyRow};
