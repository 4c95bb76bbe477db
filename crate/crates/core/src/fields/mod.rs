//! Periodic grids, sampled fields and spectral differential operators.

mod grid;
pub mod snapshot;
mod spectral;

pub use grid::{Grid, ScalarField, VectorField};
pub use spectral::{Fourier, Spectrum};
