//! `key = value` run configuration.
//!
//! ```text
//! # 2D prototype run
//! dim = 2
//! n_grid = 64
//! eps = 0.05
//! dt = 1e-3
//! t_end = 1
//! coeffs = prototype{chi0=1}
//! phi = cosine{amp=1, axis=1, mode=1}
//! ```
//!
//! Unknown or repeated keys are errors. Relative paths inside `coeffs` and
//! `phi` resolve against the directory of the configuration file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::coefficients::{derive_chemo, CoefficientSet, DerivedChemo, Potential, DEFAULT_SAMPLES};
use crate::diagnostics::DEFAULT_FLOOR;
use crate::error::{Error, Result};
use crate::fields::snapshot::{self, Snapshot};
use crate::fields::{Fourier, Grid};
use crate::stokes::StokesOperator;
use crate::system::{make_initial_data, InitPreset, PresetKind, SimParams, State, Stepper, DEFAULT_CFL_GUARD};

/// Coefficient family named in a configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum CoeffSpec {
    Prototype { chi0: f64 },
    Powerlaw { f_exp: f64, chi0: f64 },
    Tabulated { path: PathBuf },
}

/// Potential named in a configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiSpec {
    Zero,
    Cosine { amp: f64, axis: usize, mode: i64 },
    Snapshot { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub n_grid: usize,
    pub box_length: f64,
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    pub coeffs: CoeffSpec,
    /// Signal ceiling; defaults to `init_c_amp`.
    pub s0: Option<f64>,
    pub phi: PhiSpec,
    pub init: PresetKind,
    /// Defaults to the box volume, i.e. unit mean density.
    pub init_mass: Option<f64>,
    pub init_c_amp: f64,
    pub init_c_support: f64,
    pub init_u_norm: f64,
    pub seed: u64,
    pub dealias: bool,
    pub cfl_guard: f64,
    pub kappa: f64,
    pub floor: f64,
    pub output: PathBuf,
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n_grid: 64,
            box_length: 2.0 * PI,
            eps: 0.05,
            dt: 1e-3,
            t_end: 1.0,
            coeffs: CoeffSpec::Prototype { chi0: 1.0 },
            s0: None,
            phi: PhiSpec::Zero,
            init: PresetKind::Bump,
            init_mass: None,
            init_c_amp: 1.0,
            init_c_support: 0.2,
            init_u_norm: 1.0,
            seed: 0,
            dealias: false,
            cfl_guard: DEFAULT_CFL_GUARD,
            kappa: 1.0,
            floor: DEFAULT_FLOOR,
            output: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn number<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| config_err(format!("{key}: cannot parse `{v}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(format!("{key}: expected true or false, got `{v}`"))),
    }
}

/// Split `name{a=1, b=2}` into the name and its arguments.
fn call(key: &str, v: &str) -> Result<(String, BTreeMap<String, String>)> {
    let v = v.trim();
    let Some(open) = v.find('{') else {
        return Ok((v.to_string(), BTreeMap::new()));
    };
    let inner =
        v[open + 1..].strip_suffix('}').ok_or_else(|| config_err(format!("{key}: missing closing brace in `{v}`")))?;
    let mut args = BTreeMap::new();
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, val) =
            part.split_once('=').ok_or_else(|| config_err(format!("{key}: expected name=value, got `{part}`")))?;
        if args.insert(k.trim().to_string(), val.trim().to_string()).is_some() {
            return Err(config_err(format!("{key}: repeated argument `{}`", k.trim())));
        }
    }
    Ok((v[..open].trim().to_string(), args))
}

struct Args<'a> {
    key: &'a str,
    name: String,
    map: BTreeMap<String, String>,
}

impl Args<'_> {
    fn take<T: FromStr>(&mut self, arg: &str, default: Option<T>) -> Result<T> {
        match self.map.remove(arg) {
            Some(v) => number(&format!("{}.{arg}", self.key), &v),
            None => default.ok_or_else(|| config_err(format!("{}: {} needs `{arg}`", self.key, self.name))),
        }
    }

    fn done(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(config_err(format!("{}: unknown argument `{k}` for {}", self.key, self.name))),
            None => Ok(()),
        }
    }
}

fn resolve(base: Option<&Path>, p: &str) -> PathBuf {
    let p = PathBuf::from(p);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

fn coeff_spec(v: &str, base: Option<&Path>) -> Result<CoeffSpec> {
    let (name, map) = call("coeffs", v)?;
    let mut a = Args { key: "coeffs", name: name.clone(), map };
    let spec = match name.as_str() {
        "prototype" => CoeffSpec::Prototype { chi0: a.take("chi0", Some(1.0))? },
        "powerlaw" => CoeffSpec::Powerlaw { f_exp: a.take("f_exp", None)?, chi0: a.take("chi0", Some(1.0))? },
        "tabulated" => {
            let p: String = a.take("path", None)?;
            CoeffSpec::Tabulated { path: resolve(base, &p) }
        }
        _ => return Err(config_err(format!("coeffs: unknown family `{name}`"))),
    };
    a.done()?;
    Ok(spec)
}

fn phi_spec(v: &str, base: Option<&Path>) -> Result<PhiSpec> {
    let (name, map) = call("phi", v)?;
    let mut a = Args { key: "phi", name: name.clone(), map };
    let spec = match name.as_str() {
        "zero" => PhiSpec::Zero,
        "cosine" => PhiSpec::Cosine {
            amp: a.take("amp", Some(1.0))?,
            axis: a.take("axis", None)?,
            mode: a.take("mode", Some(1))?,
        },
        "snapshot" => {
            let p: String = a.take("path", None)?;
            PhiSpec::Snapshot { path: resolve(base, &p) }
        }
        _ => return Err(config_err(format!("phi: unknown potential `{name}`"))),
    };
    a.done()?;
    Ok(spec)
}

impl RunConfig {
    /// Parse configuration text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| config_err(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(config_err(format!("line {}: repeated key `{key}`", lineno + 1)));
            }
            match key {
                "dim" => cfg.dim = number(key, value)?,
                "n_grid" => cfg.n_grid = number(key, value)?,
                "box_length" => cfg.box_length = number(key, value)?,
                "eps" => cfg.eps = number(key, value)?,
                "dt" => cfg.dt = number(key, value)?,
                "t_end" => cfg.t_end = number(key, value)?,
                "coeffs" => cfg.coeffs = coeff_spec(value, base)?,
                "s0" => cfg.s0 = Some(number(key, value)?),
                "phi" => cfg.phi = phi_spec(value, base)?,
                "init" => {
                    cfg.init = value.parse().map_err(|_| config_err(format!("init: unknown preset `{value}`")))?
                }
                "init_mass" => cfg.init_mass = Some(number(key, value)?),
                "init_c_amp" => cfg.init_c_amp = number(key, value)?,
                "init_c_support" => cfg.init_c_support = number(key, value)?,
                "init_u_norm" => cfg.init_u_norm = number(key, value)?,
                "seed" => cfg.seed = number(key, value)?,
                "dealias" => cfg.dealias = boolean(key, value)?,
                "cfl_guard" => cfg.cfl_guard = number(key, value)?,
                "kappa" => cfg.kappa = number(key, value)?,
                "floor" => cfg.floor = number(key, value)?,
                "output" => cfg.output = resolve(base, value),
                "snapshot_every" => cfg.snapshot_every = number(key, value)?,
                _ => return Err(config_err(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(config_err(m));
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if self.n_grid < 4 || self.n_grid % 2 != 0 {
            return bad(format!("n_grid must be even and at least 4, got {}", self.n_grid));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return bad(format!("box_length must be positive, got {}", self.box_length));
        }
        if !(self.kappa > 0.0) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.floor > 0.0) {
            return bad(format!("floor must be positive, got {}", self.floor));
        }
        if let Some(m) = self.init_mass {
            if !(m > 0.0) {
                return bad(format!("init_mass must be positive, got {m}"));
            }
        }
        if !(self.init_c_amp >= 0.0) || !(self.init_c_support > 0.0) || !(self.init_u_norm >= 0.0) {
            return bad("init_c_amp and init_u_norm must be nonnegative, init_c_support positive".into());
        }
        let s0 = self.s0();
        if !(s0 > 0.0) {
            return bad(format!("s0 must be positive, got {s0}"));
        }
        if self.init_c_amp > s0 {
            return bad(format!("init_c_amp {} exceeds s0 {s0}", self.init_c_amp));
        }
        if let PhiSpec::Cosine { axis, .. } = self.phi {
            if axis >= self.dim {
                return bad(format!("phi axis {axis} outside a {}D box", self.dim));
            }
        }
        self.params().validate().map_err(|e| config_err(e.to_string()))
    }

    pub fn s0(&self) -> f64 {
        self.s0.unwrap_or(self.init_c_amp)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::cube(self.dim, self.n_grid, self.box_length)
    }

    pub fn params(&self) -> SimParams {
        SimParams {
            dealias: self.dealias,
            cfl_guard: self.cfl_guard,
            snapshot_every: self.snapshot_every,
            ..SimParams::new(self.eps, self.dt, self.t_end)
        }
    }

    pub fn preset(&self) -> InitPreset {
        InitPreset {
            kind: self.init,
            mass: self.init_mass.unwrap_or_else(|| self.box_length.powi(self.dim as i32)),
            c_amplitude: self.init_c_amp,
            c_support: self.init_c_support,
            u_norm: self.init_u_norm,
            seed: self.seed,
        }
    }

    pub fn potential(&self, grid: &Grid) -> Result<Potential> {
        Ok(match &self.phi {
            PhiSpec::Zero => Potential::Zero,
            PhiSpec::Cosine { amp, axis, mode } => Potential::Cosine { amplitude: *amp, axis: *axis, mode: *mode },
            PhiSpec::Snapshot { path } => {
                let lengths: Vec<f64> = (0..grid.dim()).map(|a| grid.length(a)).collect();
                match snapshot::load(path, &lengths)? {
                    Snapshot::Scalar(s) if s.grid() == grid => Potential::Gridded(s),
                    Snapshot::Scalar(_) => return Err(Error::GridMismatch),
                    Snapshot::Vector(_) => {
                        return Err(config_err(format!("{}: potential must be a scalar snapshot", path.display())))
                    }
                }
            }
        })
    }

    pub fn coefficient_set(&self, grid: &Grid) -> Result<CoefficientSet> {
        let phi = self.potential(grid)?;
        let s0 = self.s0();
        match &self.coeffs {
            CoeffSpec::Prototype { chi0 } => CoefficientSet::prototype(*chi0, s0, phi),
            CoeffSpec::Powerlaw { f_exp, chi0 } => CoefficientSet::powerlaw(*f_exp, *chi0, s0, phi),
            CoeffSpec::Tabulated { path } => CoefficientSet::tabulated(path, s0, phi),
        }
    }

    /// Operators, coefficients, stepper and initial state of the run.
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        let grid = self.grid()?;
        let op = Arc::new(StokesOperator::new(Arc::new(Fourier::new(grid))));
        let coeffs = self.coefficient_set(&grid)?;
        let derived = derive_chemo(&coeffs, DEFAULT_SAMPLES)?;
        let state0 = make_initial_data(&self.preset(), &op, &coeffs)?;
        let stepper = Stepper::new(op.clone(), coeffs, self.params())?;
        Ok(Scenario { op, stepper, derived, state0 })
    }
}

/// Everything needed to run one configuration.
pub struct Scenario {
    pub op: Arc<StokesOperator>,
    pub stepper: Stepper,
    pub derived: DerivedChemo,
    pub state0: State,
}

impl fmt::Display for CoeffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffSpec::Prototype { chi0 } => write!(f, "prototype{{chi0={chi0}}}"),
            CoeffSpec::Powerlaw { f_exp, chi0 } => write!(f, "powerlaw{{f_exp={f_exp}, chi0={chi0}}}"),
            CoeffSpec::Tabulated { path } => write!(f, "tabulated{{path={}}}", path.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::parse(
            "# comment\n dim = 3\nn_grid=16 # trailing\ncoeffs = powerlaw{f_exp=1, chi0=2}\nphi = cosine{amp=0.5, axis=2}\ndealias = true\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.n_grid, 16);
        assert_eq!(cfg.coeffs, CoeffSpec::Powerlaw { f_exp: 1.0, chi0: 2.0 });
        assert_eq!(cfg.phi, PhiSpec::Cosine { amp: 0.5, axis: 2, mode: 1 });
        assert!(cfg.dealias);
        assert!(!RunConfig::default().dealias);
        assert_eq!(cfg.s0(), 1.0);
        assert_eq!(cfg.eps, 0.05);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        for text in [
            "colour = blue",
            "dim = 4",
            "t_end = 0",
            "dt = 2\nt_end = 1",
            "eps = 1.5",
            "n_grid = 15",
            "coeffs = magic",
            "coeffs = prototype{chi0=1, zeta=2}",
            "coeffs = powerlaw{chi0=1}",
            "phi = cosine{axis=2}",
            "dim = 2\ndim = 2",
            "init = spiral",
            "dealias = maybe",
            "init_c_amp = 2\ns0 = 1",
            "no equals sign",
        ] {
            assert!(matches!(RunConfig::parse(text, None), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let cfg =
            RunConfig::parse("coeffs = tabulated{path=tab.csv}\noutput = runs/a", Some(Path::new("/cfg"))).unwrap();
        assert_eq!(cfg.coeffs, CoeffSpec::Tabulated { path: PathBuf::from("/cfg/tab.csv") });
        assert_eq!(cfg.output, PathBuf::from("/cfg/runs/a"));
    }

    #[test]
    fn builds_a_scenario() {
        let cfg = RunConfig::parse("n_grid = 16\nphi = cosine{axis=1}\ninit = layered", None).unwrap();
        let sc = cfg.build().unwrap();
        assert!((sc.state0.mass() - cfg.box_length.powi(2)).abs() < 1e-10);
        assert!(sc.state0.c.max() <= cfg.s0() + 1e-12);
    }
}
