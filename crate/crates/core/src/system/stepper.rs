//! First-order IMEX pseudospectral stepping of the regularized system
//!
//! ```text
//! n_t + u·∇n = Δn − ∇·(n F_ε'(n) χ(c) ∇c)
//! c_t + u·∇c = Δc − F_ε(n) f(c)
//! u_t + (Y_ε u·∇)u = Δu + ∇P + n∇Φ,   ∇·u = 0
//! ```
//!
//! Transport, cross-diffusion, consumption, convection and buoyancy are
//! explicit; diffusion is solved exactly per mode. Both transport terms of
//! the `n` equation are spectral divergences, so the mean of `n` is carried
//! unchanged by every step.

use std::sync::Arc;

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::fields::{ScalarField, Spectrum, VectorField};
use crate::stokes::StokesOperator;

use super::params::SimParams;
use super::smoother::{smoother, smoother_prime};
use super::state::State;

pub struct Stepper {
    op: Arc<StokesOperator>,
    coeffs: CoefficientSet,
    params: SimParams,
    grad_phi: VectorField,
}

impl Stepper {
    pub fn new(op: Arc<StokesOperator>, coeffs: CoefficientSet, params: SimParams) -> Result<Self> {
        params.validate()?;
        coeffs.validate()?;
        let grad_phi = coeffs.phi.gradient(op.fourier())?;
        Ok(Self { op, coeffs, params, grad_phi })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn operator(&self) -> &StokesOperator {
        &self.op
    }

    /// `∇Φ` on the grid.
    pub fn grad_phi(&self) -> &VectorField {
        &self.grad_phi
    }

    /// `max|u| · dt / h`
    pub fn courant(&self, state: &State) -> f64 {
        state.u.linf() * self.params.dt / state.grid().min_spacing()
    }

    /// Advance one step of size `dt`.
    pub fn step(&self, state: &State) -> Result<State> {
        let courant = self.courant(state);
        if !(courant <= self.params.cfl_guard) {
            return Err(Error::Cfl { t: state.t, courant, limit: self.params.cfl_guard });
        }
        let ops = self.op.fourier();
        let grid = *ops.grid();
        if *state.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let dim = grid.dim();
        let size = grid.size();
        let SimParams { eps, dt, .. } = self.params;

        let n_hat = ops.forward(&state.n);
        let c_hat = ops.forward(&state.c);
        let u_hat = ops.forward_vec(&state.u);
        let grad_c: Vec<ScalarField> = (0..dim).map(|a| ops.inverse(&ops.derivative(&c_hat, a))).collect();

        let n = state.n.values();
        let c = state.c.values();
        let u: Vec<&[f64]> = state.u.components().iter().map(|x| x.values()).collect();

        // Fluxes of the n and c equations and the consumption term.
        let mut flux_n = vec![vec![0.0; size]; dim];
        let mut flux_c = vec![vec![0.0; size]; dim];
        let mut consumption = vec![0.0; size];
        for p in 0..size {
            let np = n[p].max(0.0);
            let cp = c[p].max(0.0);
            let sensitivity = n[p] * smoother_prime(np, eps) * self.coeffs.chi.value(cp);
            for a in 0..dim {
                flux_n[a][p] = n[p] * u[a][p] + sensitivity * grad_c[a].values()[p];
                flux_c[a][p] = c[p] * u[a][p];
            }
            consumption[p] = smoother(np, eps) * self.coeffs.f.value(cp);
        }
        let to_spec = |v: Vec<f64>| ops.forward(&ScalarField::from_values(grid, v).expect("grid size"));
        let flux_n_hat: Vec<Spectrum> = flux_n.into_iter().map(to_spec).collect();
        let flux_c_hat: Vec<Spectrum> = flux_c.into_iter().map(to_spec).collect();
        let mut rhs_n = ops.divergence_spec(&flux_n_hat);
        rhs_n.scale(-1.0);
        let mut rhs_c = ops.divergence_spec(&flux_c_hat);
        rhs_c.scale(-1.0);
        rhs_c.axpy(-1.0, &to_spec(consumption));

        // Yosida-regularized convection and buoyancy.
        let mut v_hat = u_hat.clone();
        self.op.yosida_spec(&mut v_hat, eps);
        let v: Vec<ScalarField> = v_hat.iter().map(|s| ops.inverse(s)).collect();
        let mut rhs_u = Vec::with_capacity(dim);
        for a in 0..dim {
            let mut acc: Vec<f64> = n.iter().zip(self.grad_phi.component(a).values()).map(|(nv, g)| nv * g).collect();
            for b in 0..dim {
                let du = ops.inverse(&ops.derivative(&u_hat[a], b));
                for ((o, vb), d) in acc.iter_mut().zip(v[b].values()).zip(du.values()) {
                    *o -= vb * d;
                }
            }
            rhs_u.push(to_spec(acc));
        }

        let mut n_new = n_hat;
        n_new.axpy(dt, &rhs_n);
        self.op.solve_heat_spec(&mut n_new, dt);
        let mut c_new = c_hat;
        c_new.axpy(dt, &rhs_c);
        self.op.solve_heat_spec(&mut c_new, dt);
        let mut u_new = u_hat;
        for (ua, ra) in u_new.iter_mut().zip(&rhs_u) {
            ua.axpy(dt, ra);
        }
        self.op.solve_stokes_spec(&mut u_new, dt);

        if self.params.dealias {
            ops.dealias(&mut n_new);
            ops.dealias(&mut c_new);
            u_new.iter_mut().for_each(|s| ops.dealias(s));
        }

        let t = state.t + dt;
        let next = State { t, n: ops.inverse(&n_new), c: ops.inverse(&c_new), u: ops.inverse_vec(&u_new) };
        if !next.is_finite() {
            return Err(Error::BlowUp { t });
        }
        Ok(next)
    }

    /// Step from `state0` to `params.t_end`, passing every new state to `observer`.
    pub fn run(&self, state0: State, mut observer: impl FnMut(&State)) -> Result<State> {
        let steps = self.params.steps_from(state0.t);
        let mut state = state0;
        for _ in 0..steps {
            state = self.step(&state)?;
            observer(&state);
        }
        Ok(state)
    }
}

/// One IMEX step; see [`Stepper::step`].
pub fn step(state: &State, params: &SimParams, coeffs: &CoefficientSet, op: Arc<StokesOperator>) -> Result<State> {
    Stepper::new(op, coeffs.clone(), *params)?.step(state)
}

/// Iterate [`step`] up to `params.t_end`.
pub fn run(
    state0: State,
    params: &SimParams,
    coeffs: &CoefficientSet,
    op: Arc<StokesOperator>,
    observer: impl FnMut(&State),
) -> Result<State> {
    Stepper::new(op, coeffs.clone(), *params)?.run(state0, observer)
}
