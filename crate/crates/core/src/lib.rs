//! Poisson wavelets on n-dimensional spheres.

pub mod asymptotics;
pub mod cli;
pub mod coefficients;
mod ddouble;
pub mod error;
pub mod kernels;
pub mod quadrature;
mod series;
pub mod sphere;
pub mod transform;
pub mod verify;
pub mod wavelets;

pub use error::{Error, Result};
