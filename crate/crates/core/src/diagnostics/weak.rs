//! Residuals of the weak formulation against a fixed library of separable
//! test functions `X(x) T(t)`.
//!
//! `T` is the smooth bump `exp(1 − 1/(1 − (t/τ)²))` on `[0, τ)`; the space
//! factors are single Fourier modes, made solenoidal for the fluid equation.
//! The limit coefficients `χ(c)`, `f(c)` and the unregularized `u ⊗ u` are
//! used, so the residuals measure the distance of a regularized trajectory
//! from a weak solution.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::coefficients::{CoefficientSet, ScalarFn};
use crate::error::{Error, Result};
use crate::fields::{Fourier, Grid, VectorField};
use crate::system::State;

pub const LIBRARY_SIZE: usize = 5;

/// `T(t)` and `T'(t)` for the bump supported on `[0, support)`.
pub fn time_bump(t: f64, support: f64) -> (f64, f64) {
    let r = t / support;
    if !(0.0..1.0).contains(&r) {
        return (0.0, 0.0);
    }
    let q = 1.0 - r * r;
    let v = (1.0 - 1.0 / q).exp();
    (v, v * (-2.0 * r / support) / (q * q))
}

fn mode_numbers(dim: usize) -> [[i64; 3]; LIBRARY_SIZE] {
    if dim == 2 {
        [[1, 0, 0], [0, 1, 0], [1, 1, 0], [1, -1, 0], [2, 1, 0]]
    } else {
        [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1], [2, 1, 0]]
    }
}

struct SpaceMode {
    x: Vec<f64>,
    /// `|k|²`, so that `−ΔX = |k|² X`.
    k_sq: f64,
    grad_x: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    /// `∂_b V_a` as `grad_v[a][b]`.
    grad_v: Vec<Vec<Vec<f64>>>,
}

impl SpaceMode {
    fn new(grid: &Grid, m: [i64; 3], phase: f64) -> Self {
        let dim = grid.dim();
        let mut k = [0.0; 3];
        for a in 0..dim {
            k[a] = 2.0 * PI * m[a] as f64 / grid.length(a);
        }
        let k_sq: f64 = k.iter().map(|x| x * x).sum();
        let mut d = if dim == 2 {
            [-k[1], k[0], 0.0]
        } else {
            let e = (0..3).min_by(|&a, &b| k[a].abs().total_cmp(&k[b].abs())).expect("three axes");
            let mut unit = [0.0; 3];
            unit[e] = 1.0;
            [k[1] * unit[2] - k[2] * unit[1], k[2] * unit[0] - k[0] * unit[2], k[0] * unit[1] - k[1] * unit[0]]
        };
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        d.iter_mut().for_each(|x| *x /= norm);

        let size = grid.size();
        let mut x = vec![0.0; size];
        let mut sin = vec![0.0; size];
        for (p, pt) in grid.points().enumerate() {
            let arg: f64 = (0..dim).map(|a| k[a] * pt[a]).sum::<f64>() + phase;
            x[p] = arg.cos();
            sin[p] = arg.sin();
        }
        let grad_x = (0..dim).map(|b| sin.iter().map(|s| -k[b] * s).collect()).collect();
        let v = (0..dim).map(|a| x.iter().map(|c| d[a] * c).collect()).collect();
        let grad_v =
            (0..dim).map(|a| (0..dim).map(|b| sin.iter().map(|s| -d[a] * k[b] * s).collect()).collect()).collect();
        Self { x, k_sq, grad_x, v, grad_v }
    }
}

/// Absolute residuals per test function of the three weak identities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct WeakReport {
    pub support: f64,
    pub r_n: [f64; LIBRARY_SIZE],
    pub r_c: [f64; LIBRARY_SIZE],
    pub r_u: [f64; LIBRARY_SIZE],
}

impl WeakReport {
    /// Largest residual of each equation.
    pub fn max(&self) -> [f64; 3] {
        let m = |r: &[f64; LIBRARY_SIZE]| r.iter().copied().fold(0.0, f64::max);
        [m(&self.r_n), m(&self.r_c), m(&self.r_u)]
    }
}

type Terms = [[f64; 3]; LIBRARY_SIZE];

/// Time integrals of the weak identities, accumulated one state at a time
/// with the trapezoid rule.
pub struct WeakAccumulator {
    ops: Arc<Fourier>,
    f: ScalarFn,
    chi: ScalarFn,
    grad_phi: VectorField,
    support: f64,
    modes: Vec<SpaceMode>,
    initial: Terms,
    integral: Terms,
    last: (f64, Terms),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl WeakAccumulator {
    pub fn new(
        ops: Arc<Fourier>,
        coeffs: &CoefficientSet,
        grad_phi: VectorField,
        support: f64,
        state0: &State,
    ) -> Result<Self> {
        if !(support > 0.0 && support.is_finite()) {
            return Err(Error::InvalidParams(format!("test support {support} must be positive")));
        }
        let grid = *ops.grid();
        if *state0.grid() != grid || *grad_phi.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let modes: Vec<SpaceMode> = mode_numbers(grid.dim())
            .iter()
            .enumerate()
            .map(|(j, &m)| SpaceMode::new(&grid, m, 0.7 * j as f64))
            .collect();
        let mut acc = Self {
            ops,
            f: coeffs.f.clone(),
            chi: coeffs.chi.clone(),
            grad_phi,
            support,
            modes,
            initial: [[0.0; 3]; LIBRARY_SIZE],
            integral: [[0.0; 3]; LIBRARY_SIZE],
            last: (state0.t, [[0.0; 3]; LIBRARY_SIZE]),
        };
        let vol = grid.cell_volume();
        let (bump0, _) = time_bump(0.0, support);
        for (j, mode) in acc.modes.iter().enumerate() {
            let u0: f64 = (0..grid.dim()).map(|a| dot(state0.u.component(a).values(), &mode.v[a])).sum();
            acc.initial[j] = [
                bump0 * vol * dot(state0.n.values(), &mode.x),
                bump0 * vol * dot(state0.c.values(), &mode.x),
                bump0 * vol * u0,
            ];
        }
        acc.last = (state0.t, acc.integrand(state0));
        Ok(acc)
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    fn integrand(&self, state: &State) -> Terms {
        let mut out = [[0.0; 3]; LIBRARY_SIZE];
        let (bump, bump_dt) = time_bump(state.t, self.support);
        if bump == 0.0 && bump_dt == 0.0 {
            return out;
        }
        let grid = *self.ops.grid();
        let dim = grid.dim();
        let vol = grid.cell_volume();
        let n = state.n.values();
        let c = state.c.values();
        let u: Vec<&[f64]> = state.u.components().iter().map(|x| x.values()).collect();
        let grad_c = self.ops.gradient(&state.c);

        let size = grid.size();
        // n χ(c) ∇c, n f(c), n ∇Φ pointwise
        let mut drift = vec![vec![0.0; size]; dim];
        let mut consumption = vec![0.0; size];
        for p in 0..size {
            let cp = c[p].max(0.0);
            let w = n[p] * self.chi.value(cp);
            for (a, d) in drift.iter_mut().enumerate() {
                d[p] = w * grad_c.component(a).values()[p];
            }
            consumption[p] = n[p] * self.f.value(cp);
        }

        for (j, m) in self.modes.iter().enumerate() {
            let nx = dot(n, &m.x);
            let cx = dot(c, &m.x);
            let mut n_flux = 0.0;
            let mut c_flux = 0.0;
            for a in 0..dim {
                n_flux += dot(&drift[a], &m.grad_x[a]);
                for p in 0..size {
                    let ug = u[a][p] * m.grad_x[a][p];
                    n_flux += n[p] * ug;
                    c_flux += c[p] * ug;
                }
            }
            let r_n = -bump_dt * nx + bump * (m.k_sq * nx - n_flux);
            let r_c = -bump_dt * cx + bump * (m.k_sq * cx + dot(&consumption, &m.x) - c_flux);

            let mut uv = 0.0;
            let mut convect = 0.0;
            let mut buoyancy = 0.0;
            for a in 0..dim {
                uv += dot(u[a], &m.v[a]);
                for p in 0..size {
                    buoyancy += n[p] * self.grad_phi.component(a).values()[p] * m.v[a][p];
                }
                for b in 0..dim {
                    for p in 0..size {
                        convect += u[a][p] * u[b][p] * m.grad_v[a][b][p];
                    }
                }
            }
            let r_u = -bump_dt * uv + bump * (m.k_sq * uv - convect - buoyancy);
            out[j] = [r_n * vol, r_c * vol, r_u * vol];
        }
        out
    }

    /// Add the time slab from the previous state to `state`.
    pub fn push(&mut self, state: &State) {
        let (t0, ref prev) = self.last;
        let h = state.t - t0;
        let next = self.integrand(state);
        for j in 0..LIBRARY_SIZE {
            for e in 0..3 {
                self.integral[j][e] += 0.5 * h * (prev[j][e] + next[j][e]);
            }
        }
        self.last = (state.t, next);
    }

    /// Residuals; fails when the trajectory stops inside the test support.
    pub fn finish(&self) -> Result<WeakReport> {
        let t_end = self.last.0;
        if t_end < self.support * (1.0 - 1e-12) {
            return Err(Error::TestSupport { support: self.support, t_end });
        }
        let mut report = WeakReport { support: self.support, ..Default::default() };
        for j in 0..LIBRARY_SIZE {
            report.r_n[j] = (self.integral[j][0] - self.initial[j][0]).abs();
            report.r_c[j] = (self.integral[j][1] - self.initial[j][1]).abs();
            report.r_u[j] = (self.integral[j][2] - self.initial[j][2]).abs();
        }
        Ok(report)
    }
}

/// Residuals of a stored trajectory whose first element is the initial state.
pub fn weak_residuals(
    trajectory: &[State],
    ops: Arc<Fourier>,
    coeffs: &CoefficientSet,
    grad_phi: VectorField,
    support: f64,
) -> Result<WeakReport> {
    let (first, rest) = trajectory.split_first().ok_or_else(|| Error::InvalidParams("empty trajectory".into()))?;
    let mut acc = WeakAccumulator::new(ops, coeffs, grad_phi, support, first)?;
    for s in rest {
        acc.push(s);
    }
    acc.finish()
}
