use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("g(s) = {value:e} is not positive at s = {s:e}")]
    NonPositiveG { s: f64, value: f64 },

    #[error("signal ceiling s0 must be positive")]
    ZeroCeiling,

    #[error("F_eps is undefined for negative argument {0}")]
    NegativeArgument(f64),

    #[error("fractional power {alpha} of the Stokes operator applied to a field with nonzero mean")]
    KernelViolation { alpha: f64 },

    #[error("fractional power exponent {0} outside [-1, 1]")]
    PowerOutOfRange(f64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("CFL guard violated at t = {t}: courant number {courant:.4} exceeds {limit}")]
    Cfl { t: f64, courant: f64, limit: f64 },

    #[error("non-finite values (numerical blow-up) at t = {t}")]
    BlowUp { t: f64 },

    #[error("singular energy weight: f(c) = 0 at c = {c:e} with nonzero gradient")]
    SingularWeight { c: f64 },

    #[error("no energy constant K in [{lo:e}, {hi:e}] satisfies the discrete inequality")]
    NoEnergyConstant { lo: f64, hi: f64 },

    #[error("weight h'(s) = {value:e} is not positive at s = {s:e}")]
    NonMonotoneWeight { s: f64, value: f64 },

    #[error("field is not strictly positive (min = {0:e})")]
    NonPositiveField(f64),

    #[error("test function support [0, {support}) exceeds trajectory end {t_end}")]
    TestSupport { support: f64, t_end: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
