//! Model coefficients `f`, `χ`, `Φ`, the derived transforms
//! `g = f/χ`, `Ψ(s) = ∫₁^s dσ/√g(σ)`, `ρ(s) = ∫₁^s dσ/g(σ)`, and the
//! sample-based validator for the structural hypotheses on `f` and `χ`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Fourier, Grid, ScalarField, VectorField};
use crate::quadrature::adaptive_simpson;

/// Default number of uniform samples on `[0, s0]` used by the validators.
pub const DEFAULT_SAMPLES: usize = 4096;

/// Tolerance band for the non-strict structural inequalities.
pub const NONSTRICT_TOL: f64 = 1e-9;

/// Threshold that a strictly positive quantity must exceed.
pub const STRICT_TOL: f64 = 1e-12;

/// Piecewise-linear table with finite-difference derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    s: Vec<f64>,
    v: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Table {
    pub fn new(s: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if s.len() != v.len() || s.len() < 3 {
            return Err(Error::InvalidCoefficients("table needs at least 3 rows".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidCoefficients("table abscissae must increase".into()));
        }
        if v.iter().chain(&s).any(|x| !x.is_finite()) {
            return Err(Error::InvalidCoefficients("table has non-finite entries".into()));
        }
        let n = s.len();
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for i in 1..n - 1 {
            let hm = s[i] - s[i - 1];
            let hp = s[i + 1] - s[i];
            d1[i] = (v[i + 1] - v[i - 1]) / (hp + hm);
            d2[i] = 2.0 * ((v[i + 1] - v[i]) / hp - (v[i] - v[i - 1]) / hm) / (hp + hm);
        }
        d1[0] = (v[1] - v[0]) / (s[1] - s[0]);
        d1[n - 1] = (v[n - 1] - v[n - 2]) / (s[n - 1] - s[n - 2]);
        d2[0] = d2[1];
        d2[n - 1] = d2[n - 2];
        Ok(Self { s, v, d1, d2 })
    }

    fn interp(&self, ys: &[f64], x: f64) -> f64 {
        let n = self.s.len();
        let i = self.s.partition_point(|&si| si <= x).clamp(1, n - 1);
        let (x0, x1) = (self.s[i - 1], self.s[i]);
        let w = (x - x0) / (x1 - x0);
        ys[i - 1] + w * (ys[i] - ys[i - 1])
    }

    pub fn value(&self, x: f64) -> f64 {
        self.interp(&self.v, x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.interp(&self.d1, x)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.interp(&self.d2, x)
    }

    pub fn max_abscissa(&self) -> f64 {
        *self.s.last().expect("non-empty")
    }
}

/// A scalar coefficient function of the signal concentration.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarFn {
    Constant(f64),
    /// `coef · s^exponent`
    Power {
        coef: f64,
        exponent: f64,
    },
    /// `coef · exp(rate · s)`
    Exponential {
        coef: f64,
        rate: f64,
    },
    Tabulated(Table),
}

impl ScalarFn {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Power { coef, exponent } => coef * s.powf(*exponent),
            ScalarFn::Exponential { coef, rate } => coef * (rate * s).exp(),
            ScalarFn::Tabulated(t) => t.value(s),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            ScalarFn::Constant(_) => 0.0,
            ScalarFn::Power { coef, exponent } => {
                if *exponent == 0.0 {
                    0.0
                } else {
                    coef * exponent * s.powf(exponent - 1.0)
                }
            }
            ScalarFn::Exponential { coef, rate } => coef * rate * (rate * s).exp(),
            ScalarFn::Tabulated(t) => t.derivative(s),
        }
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        match self {
            ScalarFn::Constant(_) => 0.0,
            ScalarFn::Power { coef, exponent } => {
                let p = *exponent;
                if p == 0.0 || p == 1.0 {
                    0.0
                } else {
                    coef * p * (p - 1.0) * s.powf(p - 2.0)
                }
            }
            ScalarFn::Exponential { coef, rate } => coef * rate * rate * (rate * s).exp(),
            ScalarFn::Tabulated(t) => t.second_derivative(s),
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, ScalarFn::Tabulated(_))
    }
}

/// Gravitational potential `Φ` on the periodic box.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Zero,
    /// `amplitude · cos(2π · mode · x_axis / L_axis)`
    Cosine {
        amplitude: f64,
        axis: usize,
        mode: i64,
    },
    Gridded(ScalarField),
}

impl Potential {
    pub fn values(&self, grid: &Grid) -> ScalarField {
        match self {
            Potential::Zero => ScalarField::zeros(*grid),
            Potential::Cosine { amplitude, axis, mode } => {
                let k = 2.0 * std::f64::consts::PI * *mode as f64 / grid.length(*axis);
                ScalarField::from_fn(*grid, |x| amplitude * (k * x[*axis]).cos())
            }
            Potential::Gridded(s) => s.clone(),
        }
    }

    /// `∇Φ` on the grid of `ops`.
    pub fn gradient(&self, ops: &Fourier) -> Result<VectorField> {
        let grid = *ops.grid();
        let grad = match self {
            Potential::Zero => VectorField::zeros(grid),
            Potential::Cosine { amplitude, axis, mode } => {
                if *axis >= grid.dim() {
                    return Err(Error::InvalidCoefficients(format!(
                        "potential axis {axis} outside a {}D grid",
                        grid.dim()
                    )));
                }
                let k = 2.0 * std::f64::consts::PI * *mode as f64 / grid.length(*axis);
                VectorField::from_fn(grid, |x| {
                    let mut g = [0.0; 3];
                    g[*axis] = -amplitude * k * (k * x[*axis]).sin();
                    g
                })
            }
            Potential::Gridded(s) => {
                if *s.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                ops.gradient(s)
            }
        };
        if !grad.is_finite() {
            return Err(Error::InvalidCoefficients("potential gradient is not finite".into()));
        }
        Ok(grad)
    }
}

/// The model functions `f` (consumption), `χ` (sensitivity), `Φ` and the
/// signal ceiling `s0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub f: ScalarFn,
    pub chi: ScalarFn,
    pub phi: Potential,
    pub s0: f64,
}

#[derive(Deserialize)]
struct TableRow {
    s: f64,
    f: f64,
    chi: f64,
}

impl CoefficientSet {
    pub fn new(f: ScalarFn, chi: ScalarFn, phi: Potential, s0: f64) -> Result<Self> {
        let set = Self { f, chi, phi, s0 };
        set.validate()?;
        Ok(set)
    }

    /// `f(s) = s`, `χ ≡ chi0`.
    pub fn prototype(chi0: f64, s0: f64, phi: Potential) -> Result<Self> {
        Self::new(ScalarFn::Power { coef: 1.0, exponent: 1.0 }, ScalarFn::Constant(chi0), phi, s0)
    }

    /// `f(s) = s^f_exp`, `χ ≡ chi0`.
    pub fn powerlaw(f_exp: f64, chi0: f64, s0: f64, phi: Potential) -> Result<Self> {
        Self::new(ScalarFn::Power { coef: 1.0, exponent: f_exp }, ScalarFn::Constant(chi0), phi, s0)
    }

    /// Read `f` and `χ` from a CSV file with header `s,f,chi`.
    pub fn tabulated(path: impl AsRef<Path>, s0: f64, phi: Potential) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut s = Vec::new();
        let mut f = Vec::new();
        let mut chi = Vec::new();
        for row in rdr.deserialize() {
            let row: TableRow = row?;
            s.push(row.s);
            f.push(row.f);
            chi.push(row.chi);
        }
        let f = Table::new(s.clone(), f)?;
        let chi = Table::new(s, chi)?;
        if f.max_abscissa() < s0 {
            return Err(Error::InvalidCoefficients(format!("table ends at s = {} below s0 = {s0}", f.max_abscissa())));
        }
        Self::new(ScalarFn::Tabulated(f), ScalarFn::Tabulated(chi), phi, s0)
    }

    /// Check `f(0) = 0`, `f ≥ 0`, `χ > 0` on sampled `[0, s0]`, and a finite `Φ`.
    pub fn validate(&self) -> Result<()> {
        if !(self.s0.is_finite() && self.s0 >= 0.0) {
            return Err(Error::InvalidCoefficients(format!("s0 = {} must be nonnegative", self.s0)));
        }
        let f0 = self.f.value(0.0);
        if f0.abs() > 1e-14 {
            return Err(Error::InvalidCoefficients(format!("f(0) = {f0} must vanish")));
        }
        for s in uniform_samples(self.s0, DEFAULT_SAMPLES) {
            let fv = self.f.value(s);
            if !(fv.is_finite() && fv >= 0.0) {
                return Err(Error::InvalidCoefficients(format!("f({s}) = {fv} is negative")));
            }
            let cv = self.chi.value(s);
            if !(cv.is_finite() && cv > 0.0) {
                return Err(Error::InvalidCoefficients(format!("chi({s}) = {cv} is not positive")));
            }
        }
        if let Potential::Gridded(p) = &self.phi {
            if !p.is_finite() {
                return Err(Error::InvalidCoefficients("potential has non-finite values".into()));
            }
        }
        Ok(())
    }

    /// `(χ f)''`
    pub fn chi_f_second(&self, s: f64) -> f64 {
        let (f, f1, f2) = (self.f.value(s), self.f.derivative(s), self.f.second_derivative(s));
        let (c, c1, c2) = (self.chi.value(s), self.chi.derivative(s), self.chi.second_derivative(s));
        f2 * c + 2.0 * f1 * c1 + f * c2
    }
}

/// `n` uniform points on `[0, s0]`, endpoints included.
pub fn uniform_samples(s0: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|i| s0 * i as f64 / (n - 1) as f64).collect()
}

/// `g = f/χ` with its first two derivatives.
#[derive(Clone, Debug)]
enum GEval {
    Analytic { f: ScalarFn, chi: ScalarFn },
    Sampled { g: Table },
}

impl GEval {
    fn new(coeffs: &CoefficientSet, n_samples: usize) -> Result<Self> {
        if coeffs.f.is_tabulated() || coeffs.chi.is_tabulated() {
            let s = uniform_samples(coeffs.s0, n_samples.max(3));
            let g = s.iter().map(|&x| coeffs.f.value(x) / coeffs.chi.value(x)).collect();
            Ok(GEval::Sampled { g: Table::new(s, g)? })
        } else {
            Ok(GEval::Analytic { f: coeffs.f.clone(), chi: coeffs.chi.clone() })
        }
    }

    fn eval(&self, s: f64) -> (f64, f64, f64) {
        match self {
            GEval::Analytic { f, chi } => {
                let (f0, f1, f2) = (f.value(s), f.derivative(s), f.second_derivative(s));
                let (c0, c1, c2) = (chi.value(s), chi.derivative(s), chi.second_derivative(s));
                let g = f0 / c0;
                let g1 = (f1 * c0 - f0 * c1) / (c0 * c0);
                let g2 = (f2 * c0 * c0 - 2.0 * f1 * c1 * c0 - f0 * c2 * c0 + 2.0 * f0 * c1 * c1) / (c0 * c0 * c0);
                (g, g1, g2)
            }
            GEval::Sampled { g } => (g.value(s), g.derivative(s), g.second_derivative(s)),
        }
    }
}

/// Tabulated `∫₁^s g(σ)^(-power) dσ` with cubic Hermite interpolation.
///
/// Node slopes are the exact integrand values, so interpolation is fourth
/// order even where the integrand is steep near `s = 0`.
#[derive(Clone, Debug)]
struct Antiderivative {
    power: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// `g'(0)` when positive; enables the linear-`g` extrapolation below the first node.
    g1_zero: Option<f64>,
}

impl Antiderivative {
    fn build(g: &GEval, power: f64, nodes: &[f64], g1_zero: Option<f64>) -> Self {
        let integrand = |s: f64| g.eval(s).0.powf(-power);
        let slopes: Vec<f64> = nodes.iter().map(|&s| integrand(s)).collect();
        let mut cumulative = vec![0.0; nodes.len()];
        for i in 1..nodes.len() {
            cumulative[i] = cumulative[i - 1] + adaptive_simpson(&integrand, nodes[i - 1], nodes[i], 1e-15);
        }
        // Anchor so that the value at s = 1 is zero.
        let anchor = match nodes.iter().position(|&s| s == 1.0) {
            Some(i) => cumulative[i],
            None => {
                let last = nodes.len() - 1;
                if 1.0 > nodes[last] {
                    cumulative[last] + adaptive_simpson(&integrand, nodes[last], 1.0, 1e-14)
                } else {
                    adaptive_simpson(&integrand, nodes[0], 1.0, 1e-14)
                }
            }
        };
        let values = cumulative.iter().map(|c| c - anchor).collect();
        Self { power, nodes: nodes.to_vec(), values, slopes, g1_zero }
    }

    fn eval(&self, g: &GEval, s: f64) -> f64 {
        let n = self.nodes.len();
        let s_min = self.nodes[0];
        let s_max = self.nodes[n - 1];
        if s < s_min {
            return match self.g1_zero {
                Some(g1) => {
                    if self.power == 0.5 {
                        let s = s.max(0.0);
                        self.values[0] - 2.0 * (s_min.sqrt() - s.sqrt()) / g1.sqrt()
                    } else {
                        let s = s.max(f64::MIN_POSITIVE);
                        self.values[0] + (s / s_min).ln() / g1
                    }
                }
                None => self.values[0],
            };
        }
        if s > s_max {
            let integrand = |x: f64| g.eval(x).0.powf(-self.power);
            return self.values[n - 1] + adaptive_simpson(&integrand, s_max, s, 1e-14);
        }
        let i = self.nodes.partition_point(|&x| x <= s).clamp(1, n - 1);
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let h = x1 - x0;
        let t = (s - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i - 1] + h10 * h * self.slopes[i - 1] + h01 * self.values[i] + h11 * h * self.slopes[i]
    }
}

/// `g`, `Ψ`, `ρ` and the linear envelope constants `c_g^± ` on `[0, s0]`.
#[derive(Clone, Debug)]
pub struct DerivedChemo {
    g: GEval,
    psi: Antiderivative,
    rho: Antiderivative,
    cg_minus: f64,
    cg_plus: f64,
    s0: f64,
    s_min: f64,
}

impl DerivedChemo {
    pub fn g(&self, s: f64) -> f64 {
        self.g.eval(s).0
    }

    pub fn g_prime(&self, s: f64) -> f64 {
        self.g.eval(s).1
    }

    pub fn g_second(&self, s: f64) -> f64 {
        self.g.eval(s).2
    }

    /// `Ψ(s) = ∫₁^s dσ/√g(σ)`
    pub fn psi(&self, s: f64) -> f64 {
        self.psi.eval(&self.g, s)
    }

    /// `ρ(s) = ∫₁^s dσ/g(σ)`
    pub fn rho(&self, s: f64) -> f64 {
        self.rho.eval(&self.g, s)
    }

    pub fn cg_minus(&self) -> f64 {
        self.cg_minus
    }

    pub fn cg_plus(&self) -> f64 {
        self.cg_plus
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Lower end of the `Ψ`/`ρ` tables, `1e-6 · s0`.
    pub fn s_min(&self) -> f64 {
        self.s_min
    }
}

/// Tabulate `g`, `Ψ`, `ρ` and the envelope constants on `[0, s0]`.
pub fn derive_chemo(coeffs: &CoefficientSet, n_samples: usize) -> Result<DerivedChemo> {
    if n_samples < 16 {
        return Err(Error::InvalidParams(format!("n_samples = {n_samples} must be at least 16")));
    }
    if coeffs.s0 <= 0.0 {
        return Err(Error::ZeroCeiling);
    }
    let s0 = coeffs.s0;
    let g = GEval::new(coeffs, n_samples)?;
    let samples = uniform_samples(s0, n_samples);
    let mut cg_minus = f64::INFINITY;
    let mut cg_plus = 0.0f64;
    for &s in samples.iter().skip(1) {
        let gv = g.eval(s).0;
        if !(gv > 0.0) {
            return Err(Error::NonPositiveG { s, value: gv });
        }
        cg_minus = cg_minus.min(gv / s);
        cg_plus = cg_plus.max(gv / s);
    }

    let s_min = 1e-6 * s0;
    let ratio = (s0 / s_min).powf(1.0 / (n_samples - 1) as f64);
    let mut nodes: Vec<f64> = (0..n_samples - 1).map(|i| s_min * ratio.powi(i as i32)).collect();
    nodes.extend(samples.iter().copied().filter(|&s| s > s_min));
    if (s_min..=s0).contains(&1.0) {
        nodes.push(1.0);
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * b.abs());
    nodes[0] = s_min;
    *nodes.last_mut().expect("non-empty") = s0;

    let g1_zero = Some(g.eval(0.0).1).filter(|v| *v > 0.0 && v.is_finite());
    let psi = Antiderivative::build(&g, 0.5, &nodes, g1_zero);
    let rho = Antiderivative::build(&g, 1.0, &nodes, g1_zero);
    Ok(DerivedChemo { g, psi, rho, cg_minus, cg_plus, s0, s_min })
}

/// Identifier of a structural condition on `f` and `χ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Condition {
    /// `(f/χ)' > 0`
    GIncreasing,
    /// `(f/χ)'' ≤ 0`
    GConcave,
    /// `(χ f)'' ≥ 0`
    ChiFConvex,
    /// `f g'/(2g²) − f'/g ≤ 0`, recorded as a consistency check only.
    SignIdentity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub s: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructuralReport {
    pub passes: bool,
    pub violations: Vec<Violation>,
    /// Failures of the derived sign identity; these do not affect `passes`.
    pub consistency: Vec<Violation>,
    pub sample_grid: Vec<f64>,
}

impl StructuralReport {
    pub fn fails(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

/// Evaluate the structural hypotheses at `n_samples` uniform points of `[0, s0]`.
pub fn check_structural(coeffs: &CoefficientSet, n_samples: usize) -> StructuralReport {
    let sample_grid = uniform_samples(coeffs.s0, n_samples.max(2));
    let mut violations = Vec::new();
    let mut consistency = Vec::new();
    let g = match GEval::new(coeffs, n_samples) {
        Ok(g) => g,
        Err(_) => {
            return StructuralReport { passes: false, violations, consistency, sample_grid };
        }
    };
    for &s in &sample_grid {
        let (gv, g1, g2) = g.eval(s);
        if !(g1 > STRICT_TOL) {
            violations.push(Violation { condition: Condition::GIncreasing, s, value: g1 });
        }
        if !(g2 <= NONSTRICT_TOL) {
            violations.push(Violation { condition: Condition::GConcave, s, value: g2 });
        }
        let cf2 = coeffs.chi_f_second(s);
        if !(cf2 >= -NONSTRICT_TOL) {
            violations.push(Violation { condition: Condition::ChiFConvex, s, value: cf2 });
        }
        if s > 0.0 {
            let f = coeffs.f.value(s);
            let f1 = coeffs.f.derivative(s);
            let sign = f * g1 / (2.0 * gv * gv) - f1 / gv;
            if !(sign <= NONSTRICT_TOL) {
                consistency.push(Violation { condition: Condition::SignIdentity, s, value: sign });
            }
        }
    }
    StructuralReport { passes: violations.is_empty(), violations, consistency, sample_grid }
}
