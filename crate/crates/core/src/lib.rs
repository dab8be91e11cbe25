//! Numerical laboratory for branched (two-valued) harmonic functions.
//!
//! The crate computes harmonic sections of flat affine bundles with sign
//! holonomy around a branch set, extracts the branch-point coefficients `A`
//! and `B`, evaluates the nonlocal operator `P`, and runs the deformation
//! calculus (derivative of `A` under motion of the branch set, Newton iteration
//! with the approximate inverse `(2/3)B⁻¹`).

pub mod conventions;
pub mod domain;
pub mod error;
pub mod flat_kernel;
pub mod numerics;
pub mod p_operator;
pub mod solver;
pub mod asymptotics;
pub mod oracle;
pub mod deformation;
pub mod io;

pub use error::{Error, Result};
pub use num_complex::Complex64;
