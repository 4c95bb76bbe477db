use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Fourier, ScalarField};

/// `(2 + √3)²`
pub const BOUND_CONSTANT: f64 = 13.928203230275509;

/// Outcome of `∫ (h'/h³)|∇φ|⁴ ≤ (2+√3)² ∫ (h/h')|D²Θ(φ)|²`, `Θ' = 1/h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityResult {
    pub lhs: f64,
    pub rhs: f64,
    #[serde(rename = "constant")]
    pub bound_constant: f64,
    pub satisfied: bool,
}

impl InequalityResult {
    /// `lhs / rhs`, zero when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Evaluate both sides for a positive field `phi` and a weight `h` with `h' > 0`.
///
/// `D²Θ(φ) = Θ''(φ) ∇φ⊗∇φ + Θ'(φ) D²φ` with `Θ' = 1/h`, `Θ'' = −h'/h²`.
pub fn functional_inequality_check(
    ops: &Fourier,
    phi: &ScalarField,
    h: impl Fn(f64) -> f64,
    h_prime: impl Fn(f64) -> f64,
) -> Result<InequalityResult> {
    if phi.grid() != ops.grid() {
        return Err(Error::GridMismatch);
    }
    let min = phi.min();
    if !(min > 0.0) {
        return Err(Error::NonPositiveField(min));
    }
    let dim = ops.grid().dim();
    let spec = ops.forward(phi);
    let grad = ops.gradient_spec(&spec);
    let hess = ops.hessian_spec(&spec);

    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (p, &s) in phi.values().iter().enumerate() {
        let (hv, hp) = (h(s), h_prime(s));
        if !(hp > 0.0) {
            return Err(Error::NonMonotoneWeight { s, value: hp });
        }
        if !(hv > 0.0) {
            return Err(Error::InvalidParams(format!("weight h({s}) = {hv} is not positive")));
        }
        let g: Vec<f64> = (0..dim).map(|a| grad.component(a).values()[p]).collect();
        let g_sq: f64 = g.iter().map(|x| x * x).sum();
        lhs += hp / (hv * hv * hv) * g_sq * g_sq;

        let d1 = 1.0 / hv;
        let d2 = -hp / (hv * hv);
        let mut frob = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                let m = d2 * g[a] * g[b] + d1 * hess[a][b].values()[p];
                frob += m * m;
            }
        }
        rhs += hv / hp * frob;
    }
    let vol = ops.grid().cell_volume();
    let (lhs, rhs) = (lhs * vol, rhs * vol);
    let satisfied = lhs <= BOUND_CONSTANT * rhs + 1e-9 * (1.0 + lhs);
    Ok(InequalityResult { lhs, rhs, bound_constant: BOUND_CONSTANT, satisfied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::random::random_positive;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_value() {
        assert_relative_eq!(BOUND_CONSTANT, (2.0 + 3f64.sqrt()).powi(2), max_relative = 1e-15);
    }

    #[test]
    fn constant_field_is_trivial() {
        let ops = Fourier::new(Grid::cube(2, 16, 1.0).unwrap());
        let phi = ScalarField::constant(*ops.grid(), 3.0);
        let r = functional_inequality_check(&ops, &phi, |s| s, |_| 1.0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.satisfied);
    }

    fn one_d_reference(m: usize) -> (f64, f64) {
        // φ = 2 + sin(2πx), h = s: lhs = ∫ φ'^4/φ³, rhs = ∫ φ (ln φ)''² with (ln φ)'' = φ''/φ − φ'²/φ²
        let h = 1.0 / m as f64;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for i in 0..m {
            let x = i as f64 * h;
            let p = 2.0 + (2.0 * PI * x).sin();
            let d = 2.0 * PI * (2.0 * PI * x).cos();
            let dd = -4.0 * PI * PI * (2.0 * PI * x).sin();
            lhs += d.powi(4) / p.powi(3);
            rhs += p * (dd / p - d * d / (p * p)).powi(2);
        }
        (lhs * h, rhs * h)
    }

    #[test]
    fn sine_profile_against_fine_grid() {
        let run = |n: usize| {
            let ops = Fourier::new(Grid::new(&[n, 4], &[1.0, 1.0]).unwrap());
            let phi = ScalarField::from_fn(*ops.grid(), |x| 2.0 + (2.0 * PI * x[0]).sin());
            functional_inequality_check(&ops, &phi, |s| s, |_| 1.0).unwrap()
        };
        let coarse = run(64);
        let fine = run(256);
        let (l, r) = one_d_reference(4096);
        assert_relative_eq!(coarse.lhs, fine.lhs, max_relative = 1e-8);
        assert_relative_eq!(coarse.rhs, fine.rhs, max_relative = 1e-8);
        assert_relative_eq!(fine.lhs, l, max_relative = 1e-8);
        assert_relative_eq!(fine.rhs, r, max_relative = 1e-8);
        assert!(coarse.satisfied);
        assert!(coarse.ratio() <= BOUND_CONSTANT);
    }

    #[test]
    fn random_fields_with_power_weights() {
        let ops = Fourier::new(Grid::cube(2, 32, 2.0 * PI).unwrap());
        for seed in 0..20 {
            let phi = random_positive(&ops, seed, 4, 0.5, 2.0);
            for p in [1.0, 0.5, 0.1] {
                let r = functional_inequality_check(&ops, &phi, |s| s.powf(p), |s| p * s.powf(p - 1.0)).unwrap();
                assert!(r.satisfied, "seed {seed} p {p}: {r:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let ops = Fourier::new(Grid::cube(2, 8, 1.0).unwrap());
        let g = *ops.grid();
        let phi = ScalarField::from_fn(g, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin());
        assert!(matches!(
            functional_inequality_check(&ops, &phi, |s| s, |_| -1.0),
            Err(Error::NonMonotoneWeight { .. })
        ));
        let neg = phi.map(|v| v - 1.0);
        assert!(matches!(functional_inequality_check(&ops, &neg, |s| s, |_| 1.0), Err(Error::NonPositiveField(_))));
    }
}
