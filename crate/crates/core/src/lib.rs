//! Pseudospectral simulation of the ε-regularized chemotaxis-Navier-Stokes
//! system on a periodic box, with diagnostics for mass, the signal maximum,
//! fluid and combined energies, a priori integral growth and weak-form
//! residuals.

pub mod coefficients;
pub mod config;
pub mod diagnostics;
mod error;
pub mod fields;
pub mod quadrature;
pub mod random;
pub mod stokes;
pub mod sweep;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
