//! Numerical toolkit for the Kadomtsev-Petviashvili equations on truncated periodic domains.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: grids, transforms, the dispersion relation and multiplier application.
//! * [`multipliers`]: frequency projections, dyadic blocks, fractional derivatives and weights.
//! * [`norms`]: mixed Lebesgue norms, weighted Sobolev norms and the solver function-space norms.
//! * [`kernels`]: dyadic oscillatory kernels and their decay-exponent tables.
//! * [`evolution`]: the linear group, Duhamel quadrature, Picard solver and reference integrator.
//! * [`harness`]: random ensembles and empirical checks of the linear estimates.

pub mod error;
pub mod evolution;
pub mod harness;
pub mod kernels;
pub mod multipliers;
pub mod norms;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{DispersionSign, Grid2D, PhysicalField, SpectralField};
