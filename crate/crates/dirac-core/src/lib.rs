//! Numerical workbench for Dolbeault-Dirac operators on conformally flat
//! tori, and for positivity-certified weight constructions on truncated 3D
//! cylinders.
//!
//! The crate discretizes the two half-spinor Dirac operators of a unitary
//! line bundle over a conformal torus with forward covariant differences,
//! takes exact weighted-adjoint counterparts, and verifies spectral lower
//! bounds, weighted L² inequalities and minimal-norm solvability estimates
//! against independently computed references. All randomness is seeded;
//! reductions are sequential; with the `parallel` feature (default) site
//! loops run on rayon without changing any result bit.

pub mod error;
pub mod field;
pub mod par;

pub mod geometry;
pub mod hermeig;
pub mod gauge;
pub mod dirac;
pub mod spectral;
pub mod weights;
pub mod l2solve;

pub use error::{Error, Result};
pub use field::Cx;
