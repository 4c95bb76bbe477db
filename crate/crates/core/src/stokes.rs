//! Fluid operator algebra on the torus: Helmholtz projection, the Stokes
//! operator `A = -PΔ` (diagonal with symbol `|k|²` on solenoidal fields),
//! its fractional powers, the Yosida resolvent `(1 + εA)⁻¹` and the
//! implicit diffusion solves used by the time stepper.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{Fourier, ScalarField, Spectrum, VectorField};

#[derive(Debug)]
pub struct StokesOperator {
    ops: Arc<Fourier>,
    k_sq: Vec<f64>,
    k_odd: Vec<[f64; 3]>,
}

impl StokesOperator {
    pub fn new(ops: Arc<Fourier>) -> Self {
        let size = ops.grid().size();
        let k_sq = (0..size).map(|m| ops.k_sq(m)).collect();
        let k_odd = (0..size).map(|m| ops.odd_wavevector(m)).collect();
        Self { ops, k_sq, k_odd }
    }

    pub fn fourier(&self) -> &Fourier {
        &self.ops
    }

    pub fn fourier_arc(&self) -> Arc<Fourier> {
        Arc::clone(&self.ops)
    }

    /// Symbol of `A` at a flat mode index; zero on the mean mode.
    pub fn symbol(&self, mode: usize) -> f64 {
        self.k_sq[mode]
    }

    /// In-place Leray projection: `v̂ ↦ v̂ − k (k·v̂)/|k|²` for `k ≠ 0`.
    pub fn project_spec(&self, v: &mut [Spectrum]) {
        let dim = v.len();
        for m in 0..self.k_sq.len() {
            let k = &self.k_odd[m];
            let kk: f64 = k[..dim].iter().map(|x| x * x).sum();
            if kk == 0.0 {
                continue;
            }
            let mut kv = Complex64::new(0.0, 0.0);
            for a in 0..dim {
                kv += v[a].data()[m] * k[a];
            }
            let kv = kv / kk;
            for a in 0..dim {
                v[a].data_mut()[m] -= kv * k[a];
            }
        }
    }

    pub fn project(&self, v: &VectorField) -> VectorField {
        let mut vh = self.ops.forward_vec(v);
        self.project_spec(&mut vh);
        self.ops.inverse_vec(&vh)
    }

    /// `(1 + εA)⁻¹` on coefficients already known to be solenoidal.
    pub fn yosida_spec(&self, v: &mut [Spectrum], eps: f64) {
        for c in v.iter_mut() {
            c.apply_symbol(|m| 1.0 / (1.0 + eps * self.k_sq[m]));
        }
    }

    /// Yosida approximation `Y_ε v = (1 + εA)⁻¹ P v`.
    pub fn yosida(&self, v: &VectorField, eps: f64) -> VectorField {
        let mut vh = self.ops.forward_vec(v);
        self.project_spec(&mut vh);
        self.yosida_spec(&mut vh, eps);
        self.ops.inverse_vec(&vh)
    }

    /// `A^α v` for `α ∈ [−1, 1]`.
    ///
    /// The mean mode lies in the kernel of `A`: it is kept for `α = 0`,
    /// annihilated for `α > 0`, and must vanish for `α < 0`.
    pub fn fractional_power(&self, v: &VectorField, alpha: f64) -> Result<VectorField> {
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(Error::PowerOutOfRange(alpha));
        }
        let mut vh = self.ops.forward_vec(v);
        if alpha == 0.0 {
            return Ok(self.ops.inverse_vec(&vh));
        }
        if alpha < 0.0 {
            let scale = v.linf().max(1.0);
            if vh.iter().any(|c| c.data()[0].norm() > 1e-12 * scale) {
                return Err(Error::KernelViolation { alpha });
            }
        }
        for c in vh.iter_mut() {
            c.apply_symbol(|m| if m == 0 { 0.0 } else { self.k_sq[m].powf(alpha) });
        }
        Ok(self.ops.inverse_vec(&vh))
    }

    /// `(I − dt Δ)⁻¹` in coefficient space.
    pub fn solve_heat_spec(&self, rhs: &mut Spectrum, dt: f64) {
        rhs.apply_symbol(|m| 1.0 / (1.0 + dt * self.k_sq[m]));
    }

    pub fn solve_heat(&self, rhs: &ScalarField, dt: f64) -> ScalarField {
        let mut sh = self.ops.forward(rhs);
        self.solve_heat_spec(&mut sh, dt);
        self.ops.inverse(&sh)
    }

    /// `(I + dt A)⁻¹ P` in coefficient space.
    pub fn solve_stokes_spec(&self, rhs: &mut [Spectrum], dt: f64) {
        self.project_spec(rhs);
        for c in rhs.iter_mut() {
            self.solve_heat_spec(c, dt);
        }
    }

    pub fn solve_stokes(&self, rhs: &VectorField, dt: f64) -> VectorField {
        let mut vh = self.ops.forward_vec(rhs);
        self.solve_stokes_spec(&mut vh, dt);
        self.ops.inverse_vec(&vh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::random::{random_solenoidal, random_vector};
    use std::f64::consts::PI;

    fn op2(n: usize) -> StokesOperator {
        StokesOperator::new(Arc::new(Fourier::new(Grid::cube(2, n, 2.0 * PI).unwrap())))
    }

    fn l2(v: &VectorField) -> f64 {
        v.l2_norm_sq().sqrt()
    }

    #[test]
    fn projection_kills_gradients() {
        let op = op2(32);
        let q = ScalarField::from_fn(*op.fourier().grid(), |x| (2.0 * x[0] + x[1]).sin() + (3.0 * x[1]).cos());
        let g = op.fourier().gradient(&q);
        assert!(l2(&op.project(&g)) < 1e-12);
    }

    #[test]
    fn projection_keeps_stream_function_fields() {
        let op = op2(32);
        // ψ = sin(x) sin(2y): v = (−∂_y ψ, ∂_x ψ)
        let v = VectorField::from_fn(*op.fourier().grid(), |x| {
            [-2.0 * x[0].sin() * (2.0 * x[1]).cos(), x[0].cos() * (2.0 * x[1]).sin(), 0.0]
        });
        assert!(op.project(&v).sub(&v).linf() < 1e-13);
    }

    #[test]
    fn projection_idempotent_self_adjoint_divergence_free() {
        let op = op2(24);
        let v = random_vector(op.fourier(), 11, 6);
        let w = random_vector(op.fourier(), 12, 6);
        let pv = op.project(&v);
        assert!(op.project(&pv).sub(&pv).linf() < 1e-13);
        assert!(op.fourier().divergence(&pv).lp_norm(2.0) < 1e-12);
        let a = pv.dot(&w).integrate();
        let b = v.dot(&op.project(&w)).integrate();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn yosida_single_mode_halves() {
        let op = op2(16);
        // |k|² = 4 mode, ε = 0.25 → factor 1/(1 + 1) = 0.5
        let v = VectorField::from_fn(*op.fourier().grid(), |x| [(2.0 * x[1]).sin(), 0.0, 0.0]);
        let y = op.yosida(&v, 0.25);
        let mut half = v.clone();
        half.scale(0.5);
        assert!(y.sub(&half).linf() < 1e-14);
    }

    #[test]
    fn yosida_keeps_constants_and_contracts() {
        let op = op2(16);
        let c = VectorField::from_fn(*op.fourier().grid(), |_| [1.5, -0.5, 0.0]);
        assert!(op.yosida(&c, 0.3).sub(&c).linf() < 1e-14);
        for seed in 0..10 {
            let v = random_solenoidal(&op, seed, 5);
            assert!(l2(&op.yosida(&v, 0.1)) <= l2(&v));
        }
    }

    #[test]
    fn yosida_commutes_with_projection() {
        let op = op2(16);
        let v = random_vector(op.fourier(), 3, 5);
        let a = op.yosida(&op.project(&v), 0.2);
        let b = op.project(&op.yosida(&v, 0.2));
        assert!(a.sub(&b).linf() < 1e-13);
    }

    #[test]
    fn yosida_error_is_modewise_exact_and_halves() {
        let op = op2(16);
        // single mode with |k|² = 5: error factor ε|k|²/(1+ε|k|²)
        let m = VectorField::from_fn(*op.fourier().grid(), |x| {
            let a = x[0] + 2.0 * x[1];
            [2.0 * a.sin(), -a.sin(), 0.0]
        });
        for eps in [0.3, 0.01, 1e-4] {
            let e = l2(&op.yosida(&m, eps).sub(&m));
            let want = eps * 5.0 / (1.0 + eps * 5.0) * l2(&m);
            assert!((e - want).abs() < 1e-12 * l2(&m));
        }

        let v = random_solenoidal(&op, 9, 4);
        let av = op.fractional_power(&v, 1.0).unwrap();
        let err = |eps: f64| l2(&op.yosida(&v, eps).sub(&v));
        let mut prev = err(0.1);
        for j in 1..12 {
            let eps = 0.1 / f64::powi(2.0, j);
            let e = err(eps);
            assert!(e <= eps * l2(&av) * (1.0 + 1e-12));
            let ratio = e / prev;
            // (1 + 2ε|k|²)/(2 + 2ε|k|²) per mode, |k|² ≤ 32 in this band
            assert!(ratio >= 0.5 - 1e-12 && ratio <= 0.5 * (1.0 + 2.0 * eps * 32.0) + 1e-12, "{ratio}");
            prev = e;
        }
    }

    #[test]
    fn fractional_powers() {
        let op = op2(16);
        let v = random_solenoidal(&op, 4, 5);
        assert!(op.fractional_power(&v, 0.0).unwrap().sub(&v).linf() < 1e-14);
        let half = op.fractional_power(&v, 0.5).unwrap();
        let twice = op.fractional_power(&half, 0.5).unwrap();
        let once = op.fractional_power(&v, 1.0).unwrap();
        assert!(twice.sub(&once).linf() < 1e-11);
        let grad_sq: f64 = v.components().iter().map(|c| op.fourier().gradient(c).l2_norm_sq()).sum();
        let a_half_sq = half.l2_norm_sq();
        assert!((a_half_sq - grad_sq).abs() < 1e-12 * grad_sq);

        // |k|² = 9 mode, α = 1 → ×9
        let m = VectorField::from_fn(*op.fourier().grid(), |x| [(3.0 * x[1]).cos(), 0.0, 0.0]);
        let am = op.fractional_power(&m, 1.0).unwrap();
        let mut nine = m.clone();
        nine.scale(9.0);
        assert!(am.sub(&nine).linf() < 1e-12);

        let inv = op.fractional_power(&once, -1.0).unwrap();
        assert!(inv.sub(&v).linf() < 1e-12);
    }

    #[test]
    fn negative_power_of_mean_is_rejected() {
        let op = op2(8);
        let c = VectorField::from_fn(*op.fourier().grid(), |_| [1.0, 0.0, 0.0]);
        assert!(matches!(op.fractional_power(&c, -0.5), Err(Error::KernelViolation { .. })));
        assert!(matches!(op.fractional_power(&c, 1.5), Err(Error::PowerOutOfRange(_))));
    }

    #[test]
    fn implicit_solves() {
        let op = op2(16);
        let grid = *op.fourier().grid();
        let c = ScalarField::constant(grid, 2.5);
        assert!((&op.solve_heat(&c, 0.7) - &c).linf() < 1e-14);
        // |k|² = 1, dt = 1 → ×1/2
        let s = ScalarField::from_fn(grid, |x| x[0].sin());
        let half = op.solve_heat(&s, 1.0);
        assert!((&half - &(&s * 0.5)).linf() < 1e-14);
        // (I − dtΔ) solve(rhs) = rhs
        let rhs = ScalarField::from_fn(grid, |x| (x[0] + 2.0 * x[1]).cos() + 0.3 * (3.0 * x[0]).sin());
        let dt = 0.37;
        let sol = op.solve_heat(&rhs, dt);
        let back = &sol - &(&op.fourier().laplacian(&sol) * dt);
        assert!((&back - &rhs).linf() < 1e-12);

        let v = random_solenoidal(&op, 2, 4);
        let sv = op.solve_stokes(&v, dt);
        assert!(op.fourier().divergence(&sv).lp_norm(2.0) < 1e-12);
    }
}
