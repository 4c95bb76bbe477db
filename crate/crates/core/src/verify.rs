//! Named self-check suites with pass/fail tables.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::coefficients::{
    check_structural, derive_chemo, CoefficientSet, Condition, Potential, ScalarFn, DEFAULT_SAMPLES,
};
use crate::config::{PhiSpec, RunConfig};
use crate::diagnostics::{
    energy_functional, fit_energy_constant, fluid_energy_residual, functional_inequality_check, run_recorded,
    signal_energy_via_psi, weak_residuals, Recorder, DEFAULT_FLOOR,
};
use crate::error::{Error, Result};
use crate::fields::{Fourier, Grid, ScalarField, VectorField};
use crate::random::{random_positive, random_scalar, random_solenoidal, random_vector};
use crate::stokes::StokesOperator;
use crate::system::{f_eps, f_eps_prime, SimParams, State, Stepper};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Operators,
    Coefficients,
    Inequality,
    Energy,
    Weak,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Operators, Suite::Coefficients, Suite::Inequality, Suite::Energy, Suite::Weak];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Operators => "operators",
            Suite::Coefficients => "coefficients",
            Suite::Inequality => "inequality",
            Suite::Energy => "energy",
            Suite::Weak => "weak",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyTable {
    pub suite: String,
    pub rows: Vec<CheckRow>,
}

impl VerifyTable {
    fn new(suite: Suite) -> Self {
        Self { suite: suite.name().into(), rows: vec![] }
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.rows.push(CheckRow { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

impl fmt::Display for VerifyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        writeln!(f, "suite {}", self.suite)?;
        for r in &self.rows {
            let mark = if r.passed { "PASS" } else { "FAIL" };
            writeln!(f, "  [{mark}] {:width$}  {}", r.name, r.detail)?;
        }
        let ok = self.rows.iter().filter(|r| r.passed).count();
        write!(f, "  {ok}/{} passed", self.rows.len())
    }
}

pub fn run_suite(suite: Suite) -> Result<VerifyTable> {
    match suite {
        Suite::Operators => operators(),
        Suite::Coefficients => coefficients(),
        Suite::Inequality => inequality(),
        Suite::Energy => energy(),
        Suite::Weak => weak(),
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fixed(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn l2_scalar(a: &ScalarField) -> f64 {
    a.lp_norm(2.0)
}

fn l2(v: &VectorField) -> f64 {
    v.l2_norm_sq().sqrt()
}

fn inner(a: &ScalarField, b: &ScalarField) -> f64 {
    (a * b).integrate()
}

fn inner_vec(a: &VectorField, b: &VectorField) -> f64 {
    a.dot(b).integrate()
}

fn operators() -> Result<VerifyTable> {
    let mut t = VerifyTable::new(Suite::Operators);
    for (dim, n) in [(2, 32), (3, 16)] {
        let grid = Grid::cube(dim, n, 2.0 * PI)?;
        let op = StokesOperator::new(Arc::new(Fourier::new(grid)));
        let ops = op.fourier();
        let tag = |s: &str| format!("{s} {dim}D");
        let v = random_vector(ops, 11, 6);
        let w = random_vector(ops, 12, 6);

        let pv = op.project(&v);
        let again = op.project(&pv).sub(&pv).linf();
        t.check(&tag("projection idempotent"), again < 1e-12, format!("|PPv - Pv|_inf = {again:.2e}"));
        let div = ops.divergence(&pv).lp_norm(2.0);
        t.check(&tag("projection solenoidal"), div < 1e-11, format!("|div Pv| = {div:.2e}"));
        let sym = (inner_vec(&pv, &w) - inner_vec(&v, &op.project(&w))).abs();
        t.check(&tag("projection self-adjoint"), sym < 1e-10 * l2(&v) * l2(&w), format!("defect {sym:.2e}"));

        let f = random_scalar(ops, 13, 6);
        let g = random_scalar(ops, 14, 6);
        let direct = f.lp_norm(2.0).powi(2);
        let spectral = ops.spectral_energy(&ops.forward(&f));
        let rel = (direct - spectral).abs() / direct;
        t.check(&tag("parseval"), rel < 1e-12, format!("relative defect {rel:.2e}"));

        let adj = (0..dim)
            .map(|a| {
                let dfg = inner(&ops.inverse(&ops.derivative(&ops.forward(&f), a)), &g);
                let fdg = inner(&f, &ops.inverse(&ops.derivative(&ops.forward(&g), a)));
                (dfg + fdg).abs()
            })
            .fold(0.0, f64::max);
        t.check(
            &tag("derivative skew-adjoint"),
            adj < 1e-10 * l2_scalar(&f) * l2_scalar(&g),
            format!("defect {adj:.2e}"),
        );

        let u = random_solenoidal(&op, 15, 5);
        let z = random_solenoidal(&op, 16, 5);
        let au = op.fractional_power(&u, 1.0)?;
        let az = op.fractional_power(&z, 1.0)?;
        let sa = (inner_vec(&au, &z) - inner_vec(&u, &az)).abs();
        t.check(&tag("stokes symmetric"), sa < 1e-9 * l2(&au) * l2(&z), format!("defect {sa:.2e}"));
        let grad_sq: f64 = u.components().iter().map(|c| ops.gradient(c).l2_norm_sq()).sum();
        let half = op.fractional_power(&u, 0.5)?.l2_norm_sq();
        t.check(
            &tag("A^1/2 norm = gradient norm"),
            (half - grad_sq).abs() < 1e-11 * grad_sq,
            format!("{half:.6e} vs {grad_sq:.6e}"),
        );
        let yu = l2(&op.yosida(&u, 0.1));
        t.check(&tag("yosida contraction"), yu <= l2(&u), format!("{yu:.4e} <= {:.4e}", l2(&u)));

        let dt = 0.01;
        let sol = op.solve_heat(&f, dt);
        let back = &sol - &(&ops.laplacian(&sol) * dt);
        let err = (&back - &f).linf();
        t.check(&tag("heat solve inverts I - dt lap"), err < 1e-12 * f.linf().max(1.0), format!("{err:.2e}"));
    }
    Ok(t)
}

fn coefficients() -> Result<VerifyTable> {
    let mut t = VerifyTable::new(Suite::Coefficients);
    let s0 = 4.0;
    let proto = CoefficientSet::prototype(1.0, s0, Potential::Zero)?;
    let rep = check_structural(&proto, DEFAULT_SAMPLES);
    t.check("prototype structural", rep.passes, format!("{} violations", rep.violations.len()));
    t.check("prototype sign identity", rep.consistency.is_empty(), format!("{} failures", rep.consistency.len()));

    let d = derive_chemo(&proto, DEFAULT_SAMPLES)?;
    let samples = (0..=2000).map(|i| 0.01 + (s0 - 0.01) * i as f64 / 2000.0);
    let psi_err = samples.clone().map(|s| (d.psi(s) - 2.0 * (s.sqrt() - 1.0)).abs()).fold(0.0, f64::max);
    t.check("psi = 2(sqrt s - 1)", psi_err < 1e-8, format!("max error {psi_err:.2e} on [0.01, {s0}]"));
    let rho_err = samples.map(|s| (d.rho(s) - s.ln()).abs()).fold(0.0, f64::max);
    t.check("rho = ln s", rho_err < 1e-8, format!("max error {rho_err:.2e} on [0.01, {s0}]"));
    t.check("psi(1) = rho(1) = 0", d.psi(1.0) == 0.0 && d.rho(1.0) == 0.0, format!("{} {}", d.psi(1.0), d.rho(1.0)));
    let (lo, hi) = (d.cg_minus(), d.cg_plus());
    t.check("linear envelope", (lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12, format!("[{lo}, {hi}]"));

    let exp_chi = CoefficientSet::new(
        ScalarFn::Power { coef: 1.0, exponent: 1.0 },
        ScalarFn::Exponential { coef: 1.0, rate: 1.0 },
        Potential::Zero,
        2.0,
    )?;
    let rep = check_structural(&exp_chi, DEFAULT_SAMPLES);
    t.check(
        "f=s, chi=e^s flags (f/chi)' > 0",
        !rep.passes && rep.fails(Condition::GIncreasing),
        format!("{} violations", rep.violations.len()),
    );
    let square = CoefficientSet::powerlaw(2.0, 1.0, 2.0, Potential::Zero)?;
    let rep = check_structural(&square, DEFAULT_SAMPLES);
    let at_zero = rep.violations.iter().any(|v| v.condition == Condition::GIncreasing && v.s == 0.0);
    t.check("f=s^2 flags (f/chi)'(0) = 0", !rep.passes && at_zero, format!("{} violations", rep.violations.len()));
    Ok(t)
}

/// `count` random positive fields (minimum 0.5) with `h(s) = s^p`; returns
/// the number satisfied and the largest `lhs/rhs`.
pub fn inequality_batch(grid: Grid, count: u64, p: f64, seed: u64) -> Result<(u64, f64)> {
    let ops = Fourier::new(grid);
    let mut ok = 0;
    let mut worst = 0.0f64;
    for i in 0..count {
        let phi = random_positive(&ops, seed + i, 4, 0.5, 2.0);
        let r = functional_inequality_check(&ops, &phi, |s| s.powf(p), |s| p * s.powf(p - 1.0))?;
        if r.satisfied {
            ok += 1;
        }
        worst = worst.max(r.ratio());
    }
    Ok((ok, worst))
}

fn inequality() -> Result<VerifyTable> {
    let mut t = VerifyTable::new(Suite::Inequality);
    for (grid, p, label) in [
        (Grid::cube(2, 64, 2.0 * PI)?, 1.0, "h(s)=s 64^2"),
        (Grid::cube(3, 32, 2.0 * PI)?, 1.0, "h(s)=s 32^3"),
        (Grid::cube(2, 64, 2.0 * PI)?, 0.5, "h(s)=s^0.5 64^2"),
    ] {
        let (ok, worst) = inequality_batch(grid, 100, p, 1000)?;
        t.check(label, ok == 100, format!("{ok}/100 satisfied, max lhs/rhs {worst:.3}"));
    }
    Ok(t)
}

/// Configuration of the prototype bump run used by the checks, dealiased.
pub fn prototype_config(dim: usize, n_grid: usize) -> RunConfig {
    RunConfig {
        dim,
        n_grid,
        phi: PhiSpec::Cosine { amp: 1.0, axis: dim - 1, mode: 1 },
        seed: 7,
        dealias: true,
        ..RunConfig::default()
    }
}

/// Outcome of one Taylor-Green run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaylorGreen {
    /// `‖u − u_exact‖_{L²}` at the final time.
    pub error_l2: f64,
    /// Fluid energy residual of the last step.
    pub residual: f64,
    pub max_divergence: f64,
}

/// Decaying vortex `(sin x cos y, −cos x sin y) e^{−2t}` on `[0, 2π]²`
/// with no cells and no potential, stepped to `t_end`.
pub fn taylor_green(n: usize, dt: f64, t_end: f64) -> Result<TaylorGreen> {
    let grid = Grid::cube(2, n, 2.0 * PI)?;
    let op = Arc::new(StokesOperator::new(Arc::new(Fourier::new(grid))));
    let coeffs = CoefficientSet::prototype(1.0, 1.0, Potential::Zero)?;
    let vortex = |t: f64| {
        let d = (-2.0 * t).exp();
        VectorField::from_fn(grid, move |x| [d * x[0].sin() * x[1].cos(), -d * x[0].cos() * x[1].sin(), 0.0])
    };
    let stepper = Stepper::new(op.clone(), coeffs, SimParams { dealias: true, ..SimParams::new(0.05, dt, t_end) })?;
    let mut state = State::new(0.0, ScalarField::zeros(grid), ScalarField::zeros(grid), vortex(0.0))?;
    let mut residual = 0.0;
    let mut max_divergence = 0.0f64;
    for _ in 0..stepper.params().steps_from(0.0) {
        let next = stepper.step(&state)?;
        residual = fluid_energy_residual(&state, &next, dt, op.fourier(), stepper.grad_phi());
        max_divergence = max_divergence.max(next.divergence_l2(op.fourier()));
        state = next;
    }
    let error_l2 = l2(&state.u.sub(&vortex(state.t)));
    Ok(TaylorGreen { error_l2, residual, max_divergence })
}

fn energy() -> Result<VerifyTable> {
    let mut t = VerifyTable::new(Suite::Energy);

    let epsilons = [0.5, 0.25, 0.125];
    let s_grid: Vec<f64> = (0..=10_000).map(|i| i as f64 * 0.01).collect();
    let mut ok = true;
    let mut prev_gap = f64::INFINITY;
    let mut prev: Option<Vec<f64>> = None;
    for &e in &epsilons {
        let vals = s_grid.iter().map(|&s| f_eps(s, e)).collect::<Result<Vec<_>>>()?;
        for (&s, &v) in s_grid.iter().zip(&vals) {
            ok &= (0.0..=s).contains(&v) && f_eps_prime(s, e)? == 1.0 / (1.0 + e * s);
        }
        if let Some(p) = &prev {
            ok &= vals.iter().zip(p).all(|(a, b)| a >= b);
        }
        let gap = s_grid.iter().zip(&vals).map(|(s, v)| s - v).fold(0.0, f64::max);
        ok &= gap < prev_gap;
        prev_gap = gap;
        prev = Some(vals);
    }
    t.check("smoother contract", ok, "0 <= F_eps(s) <= s, F'_eps exact, monotone in eps on [0, 100]");

    let runs = [2e-3, 1e-3, 5e-4].map(|dt| taylor_green(32, dt, 0.1));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = runs.windows(2).map(|w| w[0].residual / w[1].residual).collect();
    t.check(
        "fluid residual first order",
        ratios.iter().all(|r| (1.8..=2.2).contains(r)),
        format!("ratios {}", fixed(&ratios)),
    );
    let err_ratios: Vec<f64> = runs.windows(2).map(|w| w[0].error_l2 / w[1].error_l2).collect();
    t.check(
        "taylor-green error first order",
        err_ratios.iter().all(|r| (1.8..=2.2).contains(r)),
        format!("ratios {}, error at dt=1e-3 {:.2e}", fixed(&err_ratios), runs[1].error_l2),
    );

    let cfg = RunConfig { t_end: 0.2, ..prototype_config(2, 32) };
    let sc = cfg.build()?;
    let ops = sc.op.fourier();
    let direct = energy_functional(&sc.state0, ops, &sc.derived, cfg.kappa, cfg.floor)?.energy_signal;
    let via_psi = signal_energy_via_psi(&sc.state0.c, ops, &sc.derived);
    let rel = (direct - via_psi).abs() / direct;
    t.check("signal energy two ways", rel < 1e-8, format!("relative defect {rel:.2e}"));

    let c0 = sc.state0.c.max();
    let rec = Recorder::new(&sc.stepper, sc.derived.clone(), cfg.kappa, cfg.floor, &sc.state0)?;
    let (_, d) = run_recorded(&sc.stepper, sc.state0.clone(), rec)?;
    let drift = d.mass_drift();
    t.check("mass conserved", drift <= 1e-10, format!("relative drift {drift:.2e}"));
    t.check("signal maximum principle", d.c_peak <= c0 + 1e-8, format!("max c {:.6} vs {c0:.6}", d.c_peak));
    let nonneg =
        d.records.iter().all(|r| r.dissip_n >= 0.0 && r.dissip_c4 >= 0.0 && r.dissip_c2 >= 0.0 && r.dissip_u >= 0.0);
    t.check("dissipation nonnegative", nonneg, format!("{} records", d.records.len()));
    let fit = fit_energy_constant(&d.records, cfg.kappa)?;
    let f0 = d.records[0].energy_total;
    let bounded =
        d.records.iter().all(|r| r.energy_total <= f0 + fit.k_hat * (r.t - d.records[0].t) + 1e-9 * f0.abs().max(1.0));
    t.check("energy constant", fit.k_hat.is_finite() && bounded, format!("k_hat {:.4e}", fit.k_hat));
    Ok(t)
}

fn weak() -> Result<VerifyTable> {
    let mut t = VerifyTable::new(Suite::Weak);
    let grid = Grid::cube(2, 16, 2.0 * PI)?;
    let ops = Arc::new(Fourier::new(grid));
    let coeffs = CoefficientSet::prototype(1.0, 1.0, Potential::Cosine { amplitude: 1.0, axis: 1, mode: 1 })?;
    let gp = coeffs.phi.gradient(&ops)?;
    let constant = |n: f64| -> Result<Vec<State>> {
        (0..=20)
            .map(|i| {
                State::new(
                    i as f64 * 0.01,
                    ScalarField::constant(grid, n),
                    ScalarField::zeros(grid),
                    VectorField::zeros(grid),
                )
            })
            .collect()
    };
    let zero = weak_residuals(&constant(0.0)?, ops.clone(), &coeffs, gp.clone(), 0.2)?.max();
    t.check("zero trajectory", zero == [0.0; 3], sci(&zero));
    let steady = weak_residuals(&constant(1.3)?, ops, &coeffs, gp, 0.2)?.max();
    t.check("steady state", steady[0] < 1e-10, format!("r_n {:.1e}", steady[0]));

    let base = prototype_config(2, 32);
    let mut prev: Option<[f64; 3]> = None;
    let mut ok = true;
    let mut trail = vec![];
    for level in 0..3 {
        let scale = 0.5f64.powi(level);
        let cfg = RunConfig { eps: 0.0125 * scale, dt: 2e-3 * scale, t_end: 0.1, ..base.clone() };
        let sc = cfg.build()?;
        let rec = Recorder::new(&sc.stepper, sc.derived.clone(), cfg.kappa, DEFAULT_FLOOR, &sc.state0)?
            .with_weak(&sc.stepper, cfg.t_end)?;
        let (_, d) = run_recorded(&sc.stepper, sc.state0.clone(), rec)?;
        let m = d.weak.expect("weak accumulator attached").max();
        if let Some(p) = prev {
            ok &= (0..3).all(|e| m[e] < p[e]);
        }
        trail.push(m);
        prev = Some(m);
    }
    t.check("refinement decreases residuals", ok, trail.iter().map(|m| sci(m)).collect::<Vec<_>>().join(" -> "));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nonsense".parse::<Suite>().is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        for s in [Suite::Operators, Suite::Coefficients, Suite::Weak] {
            let t = run_suite(s).unwrap();
            assert!(t.passed(), "{t}");
        }
    }

    #[test]
    fn table_renders_marks() {
        let mut t = VerifyTable::new(Suite::Weak);
        t.check("a", true, "x");
        t.check("bb", false, "y");
        let s = t.to_string();
        assert!(s.contains("[PASS] a "));
        assert!(s.contains("[FAIL] bb"));
        assert!(s.ends_with("1/2 passed"));
        assert!(!t.passed());
    }
}
