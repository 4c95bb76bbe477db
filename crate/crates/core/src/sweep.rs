//! Runs of one configuration at several regularization parameters, compared
//! at the final time.

use std::sync::Arc;
use std::thread;

use serde::Serialize;

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::stokes::StokesOperator;
use crate::system::{SimParams, State, Stepper};

/// Pairwise differences between consecutive ε at `t_end`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub eps: Vec<f64>,
    /// `‖n_j − n_{j+1}‖_{L¹}`
    pub diff_n: Vec<f64>,
    /// `‖c_j − c_{j+1}‖_{L¹}`
    pub diff_c: Vec<f64>,
    /// `‖u_j − u_{j+1}‖_{L²}`
    pub diff_u: Vec<f64>,
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

impl SweepReport {
    /// Whether each difference sequence is non-increasing.
    pub fn monotone(&self) -> [bool; 3] {
        [non_increasing(&self.diff_n), non_increasing(&self.diff_c), non_increasing(&self.diff_u)]
    }
}

/// Run every ε from the same `state0` (in parallel) and return the final states.
pub fn run_eps(
    op: Arc<StokesOperator>,
    coeffs: &CoefficientSet,
    base: &SimParams,
    state0: &State,
    eps: &[f64],
) -> Result<Vec<State>> {
    let steppers = eps
        .iter()
        .map(|&e| Stepper::new(op.clone(), coeffs.clone(), SimParams { eps: e, ..*base }))
        .collect::<Result<Vec<_>>>()?;
    thread::scope(|scope| {
        let handles: Vec<_> = steppers.iter().map(|s| scope.spawn(move || s.run(state0.clone(), |_| {}))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p))).collect()
    })
}

/// Differences between consecutive final states.
pub fn compare(eps: &[f64], finals: &[State]) -> SweepReport {
    let mut r = SweepReport { eps: eps.to_vec(), diff_n: vec![], diff_c: vec![], diff_u: vec![] };
    for w in finals.windows(2) {
        r.diff_n.push((&w[0].n - &w[1].n).lp_norm(1.0));
        r.diff_c.push((&w[0].c - &w[1].c).lp_norm(1.0));
        r.diff_u.push(w[0].u.sub(&w[1].u).l2_norm_sq().sqrt());
    }
    r
}

/// ε-sweep from common initial data; at least two ε values, non-increasing.
pub fn sweep_eps(
    op: Arc<StokesOperator>,
    coeffs: &CoefficientSet,
    base: &SimParams,
    state0: &State,
    eps: &[f64],
) -> Result<SweepReport> {
    if eps.len() < 2 {
        return Err(Error::InvalidParams("an ε sweep needs at least two values".into()));
    }
    if eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParams("ε values must not increase".into()));
    }
    let finals = run_eps(op, coeffs, base, state0, eps)?;
    Ok(compare(eps, &finals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Potential;
    use crate::fields::{Fourier, Grid};
    use crate::system::{make_initial_data, InitPreset};

    fn setup(mass_zero: bool) -> (Arc<StokesOperator>, CoefficientSet, State) {
        let op = Arc::new(StokesOperator::new(Arc::new(Fourier::new(Grid::cube(2, 16, 6.0).unwrap()))));
        let coeffs =
            CoefficientSet::prototype(1.0, 1.0, Potential::Cosine { amplitude: 1.0, axis: 1, mode: 1 }).unwrap();
        let mut s = make_initial_data(&InitPreset::bump(36.0, 1.0, 1.0, 3), &op, &coeffs).unwrap();
        if mass_zero {
            s.n.scale(0.0);
        }
        (op, coeffs, s)
    }

    #[test]
    fn equal_eps_give_zero_difference() {
        let (op, coeffs, s) = setup(false);
        let r = sweep_eps(op, &coeffs, &SimParams::new(0.05, 0.01, 0.1), &s, &[0.05, 0.05]).unwrap();
        assert_eq!((r.diff_n[0], r.diff_c[0], r.diff_u[0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn without_cells_only_the_fluid_feels_eps() {
        let (op, coeffs, s) = setup(true);
        let r = sweep_eps(op, &coeffs, &SimParams::new(0.1, 0.01, 0.2), &s, &[0.1, 0.05, 0.025]).unwrap();
        assert!(r.diff_n.iter().all(|&d| d == 0.0));
        assert!(r.diff_u.iter().all(|&d| d > 0.0));
        assert!(r.monotone()[2]);
        // the signal only sees ε through the velocity, a second-order effect
        assert!(r.diff_c.iter().zip(&r.diff_u).all(|(c, u)| c < u));
    }

    #[test]
    fn rejects_bad_lists() {
        let (op, coeffs, s) = setup(false);
        let p = SimParams::new(0.05, 0.01, 0.1);
        assert!(sweep_eps(op.clone(), &coeffs, &p, &s, &[0.05]).is_err());
        assert!(sweep_eps(op, &coeffs, &p, &s, &[0.05, 0.1]).is_err());
    }
}
