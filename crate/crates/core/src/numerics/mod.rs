//! Numerical building blocks shared by the physics modules.

pub mod branch;
pub mod quadrature;
pub mod richardson;

pub use branch::{principal_sqrt, sqrt_with_cut};
pub use quadrature::{adaptive_gk, adaptive_gk_real, gauss_legendre, GaussLegendre};
pub use richardson::{loglog_fit, observed_order, richardson_extrapolate, LogLogFit};
