//! Spectral kernels, Eisenstein series and identity checks on the Siegel
//! domain of complex hyperbolic 2-space, with the Picard modular group over
//! the Eisenstein integers as the arithmetic subgroup.

pub mod boundary_quadrature;
pub mod cli;
pub mod eisenstein_ring;
pub mod error;
pub mod geometry;
pub mod hypergeometric;
pub mod kernels;
pub mod operators;
pub mod picard_series;
pub mod unitary_group;

pub use error::{Error, Result};
