use serde::{Deserialize, Serialize};

use crate::coefficients::DerivedChemo;
use crate::error::{Error, Result};
use crate::fields::{Fourier, ScalarField, VectorField};
use crate::system::State;

/// Positivity floor for singular denominators.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// One row of the per-step time series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `∫ n`
    pub mass: f64,
    pub c_max: f64,
    /// `∫ |u|²`
    pub u_l2sq: f64,
    pub energy_total: f64,
    /// `∫ n ln n`
    pub energy_entropy: f64,
    /// `½ ∫ (χ(c)/f(c)) |∇c|²`
    pub energy_signal: f64,
    /// `∫ |∇n|²/n`
    pub dissip_n: f64,
    /// `∫ |∇c|⁴/c³`
    pub dissip_c4: f64,
    /// `∫ |D²c|²/c`
    pub dissip_c2: f64,
    /// `∫ |∇u|²`
    pub dissip_u: f64,
    pub fluid_residual: f64,
}

/// The four dissipation integrals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Dissipation {
    pub n: f64,
    pub c4: f64,
    pub c2: f64,
    pub u: f64,
}

fn check_floor(floor: f64) -> Result<()> {
    if floor > 0.0 && floor.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("floor {floor} must be positive")))
    }
}

fn entropy(n: &ScalarField, floor: f64) -> f64 {
    let sum: f64 = n.values().iter().map(|&v| v.max(floor)).map(|v| v * v.ln()).sum();
    sum * n.grid().cell_volume()
}

fn signal(c: &ScalarField, grad_c: &VectorField, g: impl Fn(f64) -> f64, floor: f64) -> Result<f64> {
    let grad_sq = grad_c.norm_sq();
    let mut sum = 0.0;
    for (&cv, &gs) in c.values().iter().zip(grad_sq.values()) {
        if gs == 0.0 {
            continue;
        }
        let s = cv.max(floor);
        let g = g(s);
        if !(g > 0.0) && cv > floor {
            return Err(Error::SingularWeight { c: cv });
        }
        sum += gs / g.max(floor);
    }
    Ok(0.5 * sum * c.grid().cell_volume())
}

fn energy_fields(
    state: &State,
    grad_c: &VectorField,
    derived: &DerivedChemo,
    kappa: f64,
    floor: f64,
) -> Result<DiagnosticsRecord> {
    check_floor(floor)?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidParams(format!("kappa {kappa} must be positive")));
    }
    let u_l2sq = state.u.l2_norm_sq();
    let energy_entropy = entropy(&state.n, floor);
    let energy_signal = signal(&state.c, grad_c, |s| derived.g(s), floor)?;
    Ok(DiagnosticsRecord {
        t: state.t,
        mass: state.mass(),
        c_max: state.c.max(),
        u_l2sq,
        energy_total: energy_entropy + energy_signal + kappa * u_l2sq,
        energy_entropy,
        energy_signal,
        ..Default::default()
    })
}

/// `F[n, c, u] = ∫ n ln n + ½ ∫ (χ/f)(c) |∇c|² + κ ∫ |u|²`.
///
/// Only the energy fields and `t`, `mass`, `c_max`, `u_l2sq` are filled in.
pub fn energy_functional(
    state: &State,
    ops: &Fourier,
    derived: &DerivedChemo,
    kappa: f64,
    floor: f64,
) -> Result<DiagnosticsRecord> {
    let grad_c = ops.gradient(&state.c);
    energy_fields(state, &grad_c, derived, kappa, floor)
}

/// `½ ∫ |∇Ψ(c)|²` with `Ψ(c)` differentiated spectrally.
pub fn signal_energy_via_psi(c: &ScalarField, ops: &Fourier, derived: &DerivedChemo) -> f64 {
    let psi = c.map(|v| derived.psi(v));
    0.5 * ops.gradient(&psi).l2_norm_sq()
}

fn dissipation_from(
    state: &State,
    ops: &Fourier,
    grad_c: &VectorField,
    hess_c: &[Vec<ScalarField>],
    floor: f64,
) -> Dissipation {
    let vol = state.grid().cell_volume();
    let grad_n = ops.gradient(&state.n).norm_sq();
    let n: f64 = grad_n.values().iter().zip(state.n.values()).map(|(g, &v)| g / v.max(floor)).sum();

    let gc = grad_c.norm_sq();
    let mut c4 = 0.0;
    let mut c2 = 0.0;
    for (p, (&g, &cv)) in gc.values().iter().zip(state.c.values()).enumerate() {
        c4 += g * g / (cv * cv * cv).max(floor);
        let h: f64 = hess_c.iter().flatten().map(|h| h.values()[p].powi(2)).sum();
        c2 += h / cv.max(floor);
    }

    let u: f64 = state.u.components().iter().map(|c| ops.gradient(c).l2_norm_sq()).sum();
    Dissipation { n: n * vol, c4: c4 * vol, c2: c2 * vol, u }
}

/// `∫|∇n|²/n`, `∫|∇c|⁴/c³`, `∫|D²c|²/c` and `∫|∇u|²`, denominators floored at `floor`.
pub fn dissipation_terms(state: &State, ops: &Fourier, floor: f64) -> Result<Dissipation> {
    check_floor(floor)?;
    let c_hat = ops.forward(&state.c);
    let grad_c = ops.gradient_spec(&c_hat);
    let hess_c = ops.hessian_spec(&c_hat);
    Ok(dissipation_from(state, ops, &grad_c, &hess_c, floor))
}

fn buoyancy_work(state: &State, grad_phi: &VectorField) -> f64 {
    let w = state.u.dot(grad_phi);
    w.values().iter().zip(state.n.values()).map(|(a, b)| a * b).sum::<f64>() * state.grid().cell_volume()
}

/// Discrete defect of `½ d/dt ∫|u|² + ∫|∇u|² = ∫ n u·∇Φ` over one step,
/// the quadratic terms averaged between the two time levels.
pub fn fluid_energy_residual(prev: &State, next: &State, dt: f64, ops: &Fourier, grad_phi: &VectorField) -> f64 {
    let grad_sq = |s: &State| -> f64 { s.u.components().iter().map(|c| ops.gradient(c).l2_norm_sq()).sum() };
    fluid_residual_from(prev, next, dt, grad_sq(prev), grad_sq(next), grad_phi)
}

fn fluid_residual_from(
    prev: &State,
    next: &State,
    dt: f64,
    dissip_prev: f64,
    dissip_next: f64,
    grad_phi: &VectorField,
) -> f64 {
    let rate = 0.5 * (next.u.l2_norm_sq() - prev.u.l2_norm_sq()) / dt;
    let dissip = 0.5 * (dissip_prev + dissip_next);
    let work = 0.5 * (buoyancy_work(prev, grad_phi) + buoyancy_work(next, grad_phi));
    (rate + dissip - work).abs()
}

/// Full record for `state`; `prev` with its dissipation `∫|∇u|²` supplies
/// the fluid residual.
pub(crate) fn full_record(
    state: &State,
    prev: Option<(&State, f64)>,
    dt: f64,
    ops: &Fourier,
    derived: &DerivedChemo,
    grad_phi: &VectorField,
    kappa: f64,
    floor: f64,
) -> Result<DiagnosticsRecord> {
    let c_hat = ops.forward(&state.c);
    let grad_c = ops.gradient_spec(&c_hat);
    let hess_c = ops.hessian_spec(&c_hat);
    let mut rec = energy_fields(state, &grad_c, derived, kappa, floor)?;
    let d = dissipation_from(state, ops, &grad_c, &hess_c, floor);
    rec.dissip_n = d.n;
    rec.dissip_c4 = d.c4;
    rec.dissip_c2 = d.c2;
    rec.dissip_u = d.u;
    if let Some((p, p_dissip)) = prev {
        rec.fluid_residual = fluid_residual_from(p, state, dt, p_dissip, d.u, grad_phi);
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{derive_chemo, CoefficientSet, Potential};
    use crate::fields::Grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Fourier {
        Fourier::new(Grid::cube(2, n, 1.0).unwrap())
    }

    fn proto() -> DerivedChemo {
        derive_chemo(&CoefficientSet::prototype(1.0, 4.0, Potential::Zero).unwrap(), 4096).unwrap()
    }

    fn state(n: ScalarField, c: ScalarField, u: VectorField) -> State {
        State::new(0.0, n, c, u).unwrap()
    }

    #[test]
    fn trivial_energies() {
        let ops = unit(16);
        let g = *ops.grid();
        let d = proto();
        let s = state(ScalarField::constant(g, 1.0), ScalarField::constant(g, 0.5), VectorField::zeros(g));
        assert!(energy_functional(&s, &ops, &d, 1.0, DEFAULT_FLOOR).unwrap().energy_total.abs() < 1e-15);

        let s = state(ScalarField::constant(g, 2.0), ScalarField::constant(g, 0.5), VectorField::zeros(g));
        assert_relative_eq!(
            energy_functional(&s, &ops, &d, 1.0, DEFAULT_FLOOR).unwrap().energy_total,
            2.0 * 2f64.ln(),
            max_relative = 1e-14
        );

        // ∫|u|² = 1 on the unit square
        let u = VectorField::from_fn(g, |x| [2f64.sqrt() * (2.0 * PI * x[1]).sin(), 0.0, 0.0]);
        let s = state(ScalarField::constant(g, 1.0), ScalarField::constant(g, 0.5), u);
        assert_relative_eq!(
            energy_functional(&s, &ops, &d, 3.0, DEFAULT_FLOOR).unwrap().energy_total,
            3.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn entropy_counts_floored_values() {
        let ops = unit(8);
        let g = *ops.grid();
        let mut n = ScalarField::constant(g, 0.0);
        n.values_mut()[0] = -1e-3;
        let f = DEFAULT_FLOOR;
        let expected = 64.0 * f * f.ln() * g.cell_volume();
        assert!((entropy(&n, f) - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn signal_energy_two_ways() {
        let ops = Fourier::new(Grid::cube(2, 64, 2.0 * PI).unwrap());
        let g = *ops.grid();
        let d = proto();
        let c = ScalarField::from_fn(g, |x| 2.0 + 0.8 * x[0].sin() * (2.0 * x[1]).cos());
        let s = state(ScalarField::constant(g, 1.0), c.clone(), VectorField::zeros(g));
        let direct = energy_functional(&s, &ops, &d, 1.0, DEFAULT_FLOOR).unwrap().energy_signal;
        let via_psi = signal_energy_via_psi(&c, &ops, &d);
        assert_relative_eq!(direct, via_psi, max_relative = 1e-8);
    }

    #[test]
    fn singular_weight_is_reported() {
        let ops = unit(16);
        let g = *ops.grid();
        let c = ScalarField::from_fn(g, |x| 0.5 + 0.1 * (2.0 * PI * x[0]).sin());
        let grad = ops.gradient(&c);
        let vanishing = |s: f64| if s < 1.0 { 0.0 } else { s };
        assert!(matches!(signal(&c, &grad, vanishing, DEFAULT_FLOOR), Err(Error::SingularWeight { .. })));
        let flat = ScalarField::constant(g, 0.5);
        let zero = ops.gradient(&flat);
        assert_eq!(signal(&flat, &zero, vanishing, DEFAULT_FLOOR).unwrap(), 0.0);
    }

    #[test]
    fn constant_fields_do_not_dissipate() {
        let ops = unit(16);
        let g = *ops.grid();
        let s = state(ScalarField::constant(g, 1.3), ScalarField::constant(g, 0.2), VectorField::zeros(g));
        let d = dissipation_terms(&s, &ops, DEFAULT_FLOOR).unwrap();
        assert_eq!((d.n, d.c4, d.c2, d.u), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn c4_matches_fine_quadrature() {
        let ops = Fourier::new(Grid::new(&[64, 4], &[1.0, 1.0]).unwrap());
        let g = *ops.grid();
        let c = ScalarField::from_fn(g, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin());
        let s = state(ScalarField::constant(g, 1.0), c, VectorField::zeros(g));
        let d = dissipation_terms(&s, &ops, DEFAULT_FLOOR).unwrap();

        let m = 1_000_000;
        let h = 1.0 / m as f64;
        let reference: f64 = (0..m)
            .map(|i| {
                let x = i as f64 * h;
                let c = 1.0 + 0.5 * (2.0 * PI * x).sin();
                let dc = PI * (2.0 * PI * x).cos();
                dc.powi(4) / c.powi(3)
            })
            .sum::<f64>()
            * h;
        assert_relative_eq!(d.c4, reference, max_relative = 1e-6);
    }

    #[test]
    fn single_mode_velocity_dissipation() {
        let ops = Fourier::new(Grid::cube(2, 32, 2.0 * PI).unwrap());
        let g = *ops.grid();
        let a = 0.7;
        // k = (2, 1), |k|² = 5
        let u = VectorField::from_fn(g, |x| {
            let ph = 2.0 * x[0] + x[1];
            [a * ph.sin(), -2.0 * a * ph.sin(), 0.0]
        });
        let s = state(ScalarField::constant(g, 1.0), ScalarField::constant(g, 1.0), u);
        let d = dissipation_terms(&s, &ops, DEFAULT_FLOOR).unwrap();
        let vol = g.volume();
        // components a and −2a, each contributing amp²·|k|²·vol/2
        let want = (a * a + 4.0 * a * a) * 5.0 * vol / 2.0;
        assert_relative_eq!(d.u, want, max_relative = 1e-12);
    }

    #[test]
    fn residual_vanishes_without_flow() {
        let ops = unit(16);
        let g = *ops.grid();
        let s = state(ScalarField::constant(g, 1.0), ScalarField::constant(g, 1.0), VectorField::zeros(g));
        let gp = VectorField::from_fn(g, |x| [x[0].sin(), 1.0, 0.0]);
        assert_eq!(fluid_energy_residual(&s, &s, 0.01, &ops, &gp), 0.0);
    }
}
