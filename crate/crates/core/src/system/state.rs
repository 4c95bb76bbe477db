use crate::error::{Error, Result};
use crate::fields::{Fourier, Grid, ScalarField, VectorField};

/// One time slice `(t, n, c, u)` of the regularized system.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    /// Cell density.
    pub n: ScalarField,
    /// Signal concentration.
    pub c: ScalarField,
    /// Solenoidal fluid velocity.
    pub u: VectorField,
}

impl State {
    pub fn new(t: f64, n: ScalarField, c: ScalarField, u: VectorField) -> Result<Self> {
        if n.grid() != c.grid() || n.grid() != u.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { t, n, c, u })
    }

    pub fn grid(&self) -> &Grid {
        self.n.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.n.is_finite() && self.c.is_finite() && self.u.is_finite()
    }

    pub fn mass(&self) -> f64 {
        self.n.integrate()
    }

    /// L² norm of `∇·u`.
    pub fn divergence_l2(&self, ops: &Fourier) -> f64 {
        ops.divergence(&self.u).lp_norm(2.0)
    }
}
