use crate::error::{Error, Result};

/// Default CFL safety factor for the explicit transport terms.
pub const DEFAULT_CFL_GUARD: f64 = 0.5;

/// Parameters of one run of the regularized system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    /// Regularization strength ε ∈ (0, 1).
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Apply the two-thirds truncation after every step.
    pub dealias: bool,
    /// Largest admissible `max|u| · dt / h`.
    pub cfl_guard: f64,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl SimParams {
    pub fn new(eps: f64, dt: f64, t_end: f64) -> Self {
        Self { eps, dt, t_end, dealias: false, cfl_guard: DEFAULT_CFL_GUARD, snapshot_every: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParams(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParams(format!("t_end = {} must be positive", self.t_end)));
        }
        if self.dt >= self.t_end {
            return Err(Error::InvalidParams(format!("dt = {} must be smaller than t_end = {}", self.dt, self.t_end)));
        }
        if !(self.cfl_guard > 0.0) {
            return Err(Error::InvalidParams("cfl_guard must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps from `t0` to `t_end`.
    pub fn steps_from(&self, t0: f64) -> usize {
        ((self.t_end - t0) / self.dt).round().max(0.0) as usize
    }
}
