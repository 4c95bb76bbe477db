//! The smoothed cell density `F_ε(s) = ln(1 + εs)/ε` used in the
//! regularized cross-diffusion and consumption terms.

use crate::error::{Error, Result};

#[inline]
pub(crate) fn smoother(s: f64, eps: f64) -> f64 {
    (eps * s).ln_1p() / eps
}

#[inline]
pub(crate) fn smoother_prime(s: f64, eps: f64) -> f64 {
    1.0 / (1.0 + eps * s)
}

/// `F_ε(s) = (1/ε) ln(1 + εs)`, the antiderivative of `1/(1 + εs)` with `F_ε(0) = 0`.
pub fn f_eps(s: f64, eps: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::NegativeArgument(s));
    }
    Ok(smoother(s, eps))
}

/// `F_ε'(s) = 1/(1 + εs)`
pub fn f_eps_prime(s: f64, eps: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::NegativeArgument(s));
    }
    Ok(smoother_prime(s, eps))
}
