//! Conjugate points, Picone identities and Jacobi-curve geometry for
//! quadratic variational problems of arbitrary order `k` in dimension `n`.
//!
//! The pipeline runs from a [`VariationalProblem`] in band form through its
//! linear [`HamiltonianSystem`] to an integrated [`FrameTrajectory`]. The
//! trajectory feeds the conjugate-point scan, the Picone identity checks and
//! the rank/flag analysis of the Jacobi curve.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod conjugacy;
pub mod error;
pub mod eswaran;
pub mod frame;
pub mod grassmann;
pub mod hamiltonian;
pub mod linalg;
pub mod ode;
pub mod picone;
pub mod poly;
pub mod problem;
pub mod quadrature;

pub use conjugacy::{ConjugacyOptions, ConjugacyResult, ConjugatePoint, Verdict, ZeroKind};
pub use error::{Error, Result};
pub use eswaran::ScalarSolutionSet;
pub use frame::FrameTrajectory;
pub use grassmann::{FrameJetStack, SymplecticClass};
pub use hamiltonian::{HamiltonianSystem, JetVector};
pub use picone::TestField;
pub use poly::MatrixPolynomial;
pub use problem::{QuadraticFunctional, RawCoefficients, ScalarProblem1D, ValidationReport, VariationalProblem};
