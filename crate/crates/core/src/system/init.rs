//! Smooth initial data: nonnegative `n₀` of prescribed mass, `c₀ = (√c₀)²`
//! with smooth `√c₀` and `max c₀ ≤ s0`, and solenoidal `u₀` of prescribed
//! L² norm.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::random::{random_positive, random_solenoidal};
use crate::stokes::StokesOperator;

use super::state::State;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetKind {
    /// Periodic bumps for `n₀` and `√c₀` at different centres.
    Bump,
    /// `n₀` layered along the first axis, `c₀` along the last.
    Layered,
    /// Seeded random band-limited positive fields.
    RandomBand,
    /// Constant `n₀` and `c₀`; with `c₀ = 0` and `u₀ = 0` a steady state.
    Uniform,
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bump" => Ok(PresetKind::Bump),
            "layered" => Ok(PresetKind::Layered),
            "random_band" => Ok(PresetKind::RandomBand),
            "uniform" => Ok(PresetKind::Uniform),
            other => Err(Error::Config(format!("unknown init preset '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitPreset {
    pub kind: PresetKind,
    /// `∫ n₀`
    pub mass: f64,
    /// `max c₀`, must not exceed `s0`.
    pub c_amplitude: f64,
    /// Width of the `√c₀` bump as a fraction of the box length.
    pub c_support: f64,
    /// `‖u₀‖_{L²}`
    pub u_norm: f64,
    pub seed: u64,
}

impl InitPreset {
    pub fn bump(mass: f64, c_amplitude: f64, u_norm: f64, seed: u64) -> Self {
        Self { kind: PresetKind::Bump, mass, c_amplitude, c_support: 0.2, u_norm, seed }
    }
}

/// Periodic bump `Π_a exp(w (cos(2π(x_a − x0_a)/L_a) − 1))`, equal to 1 at `x0`.
fn periodic_bump(grid: &Grid, centre: [f64; 3], support: f64) -> ScalarField {
    let w = 1.0 / (2.0 * PI * support).powi(2);
    ScalarField::from_fn(*grid, |x| {
        (0..grid.dim()).map(|a| (w * ((2.0 * PI * (x[a] - centre[a]) / grid.length(a)).cos() - 1.0)).exp()).product()
    })
}

pub fn make_initial_data(preset: &InitPreset, op: &StokesOperator, coeffs: &CoefficientSet) -> Result<State> {
    if !(preset.mass > 0.0) {
        return Err(Error::InvalidParams(format!("initial mass {} must be positive", preset.mass)));
    }
    if !(preset.c_amplitude >= 0.0) {
        return Err(Error::InvalidParams("c amplitude must be nonnegative".into()));
    }
    if preset.c_amplitude > 0.0 && coeffs.s0 == 0.0 {
        return Err(Error::ZeroCeiling);
    }
    if preset.c_amplitude > coeffs.s0 {
        return Err(Error::InvalidParams(format!("c amplitude {} exceeds s0 = {}", preset.c_amplitude, coeffs.s0)));
    }
    if !(preset.c_support > 0.0) {
        return Err(Error::InvalidParams("c support must be positive".into()));
    }
    if !(preset.u_norm >= 0.0) {
        return Err(Error::InvalidParams("u norm must be nonnegative".into()));
    }
    let grid = *op.fourier().grid();
    let ops = op.fourier();
    let dim = grid.dim();
    let len = |a: usize| grid.length(a);

    let (n_shape, sqrt_c_shape) = match preset.kind {
        PresetKind::Bump => {
            let mut cn = [0.0; 3];
            let mut cc = [0.0; 3];
            for a in 0..dim {
                cn[a] = 0.5 * len(a);
                cc[a] = 0.25 * len(a);
            }
            let n = periodic_bump(&grid, cn, 0.15).map(|b| 0.25 + b);
            let s = periodic_bump(&grid, cc, preset.c_support).map(|b| 0.3 + 0.7 * b);
            (n, s)
        }
        PresetKind::Layered => {
            let last = dim - 1;
            let n = ScalarField::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x[0] / len(0)).cos());
            let s = ScalarField::from_fn(grid, |x| 0.3 + 0.35 * (1.0 + (2.0 * PI * x[last] / len(last)).cos()));
            (n, s)
        }
        PresetKind::Uniform => (ScalarField::constant(grid, 1.0), ScalarField::constant(grid, 1.0)),
        PresetKind::RandomBand => (
            random_positive(ops, preset.seed, 3, 0.25, 1.0),
            random_positive(ops, preset.seed.wrapping_add(1), 3, 0.3, 0.7),
        ),
    };

    let n = {
        let scale = preset.mass / n_shape.integrate();
        &n_shape * scale
    };
    let amp = preset.c_amplitude.sqrt();
    let c = sqrt_c_shape.map(|r| (amp * r).powi(2));

    let u = if preset.u_norm > 0.0 {
        let mut u = random_solenoidal(op, preset.seed.wrapping_add(2), 3);
        let norm = u.l2_norm_sq().sqrt();
        if norm > 0.0 {
            u.scale(preset.u_norm / norm);
        }
        u
    } else {
        VectorField::zeros(grid)
    };
    State::new(0.0, n, c, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Potential;
    use crate::fields::Fourier;
    use std::sync::Arc;

    fn setup(dim: usize) -> (StokesOperator, CoefficientSet) {
        let grid = Grid::cube(dim, 16, 2.0 * PI).unwrap();
        let op = StokesOperator::new(Arc::new(Fourier::new(grid)));
        let coeffs = CoefficientSet::prototype(1.0, 1.0, Potential::Zero).unwrap();
        (op, coeffs)
    }

    #[test]
    fn presets_satisfy_constraints() {
        for dim in [2, 3] {
            let (op, coeffs) = setup(dim);
            for kind in [PresetKind::Bump, PresetKind::Layered, PresetKind::RandomBand, PresetKind::Uniform] {
                let preset = InitPreset { kind, mass: 1.0, c_amplitude: 0.8, c_support: 0.2, u_norm: 0.5, seed: 3 };
                let s = make_initial_data(&preset, &op, &coeffs).unwrap();
                assert!((s.mass() - 1.0).abs() < 1e-13, "{kind:?}");
                assert!(s.n.min() >= 0.0);
                assert!(s.c.min() >= 0.0);
                assert!(s.c.max() <= 0.8 + 1e-15);
                assert!(s.divergence_l2(op.fourier()) < 1e-12);
                assert!((s.u.l2_norm_sq().sqrt() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_band_is_reproducible() {
        let (op, coeffs) = setup(2);
        let preset = InitPreset {
            kind: PresetKind::RandomBand,
            mass: 2.0,
            c_amplitude: 1.0,
            c_support: 0.2,
            u_norm: 1.0,
            seed: 42,
        };
        let a = make_initial_data(&preset, &op, &coeffs).unwrap();
        let b = make_initial_data(&preset, &op, &coeffs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_invalid_presets() {
        let (op, coeffs) = setup(2);
        let mut p = InitPreset::bump(0.0, 0.5, 0.0, 1);
        assert!(make_initial_data(&p, &op, &coeffs).is_err());
        p.mass = 1.0;
        p.c_amplitude = 2.0;
        assert!(make_initial_data(&p, &op, &coeffs).is_err());
        let zero_ceiling = CoefficientSet::prototype(1.0, 0.0, Potential::Zero).unwrap();
        p.c_amplitude = 0.5;
        assert!(matches!(make_initial_data(&p, &op, &zero_ceiling), Err(Error::ZeroCeiling)));
        assert!("spiral".parse::<PresetKind>().is_err());
    }
}
