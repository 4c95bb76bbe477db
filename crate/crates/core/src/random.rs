//! Seeded generators of smooth band-limited fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::fields::{Fourier, ScalarField, Spectrum, VectorField};
use crate::stokes::StokesOperator;

/// Real field whose Fourier modes satisfy `|m_a| ≤ band` on every axis.
///
/// Amplitudes decay like `1/(1 + |m|²)`; the mean mode is left at zero.
pub fn band_limited(ops: &Fourier, rng: &mut impl Rng, band: i64) -> ScalarField {
    let grid = *ops.grid();
    let mut sh = Spectrum::zeros(grid);
    for m in 1..grid.size() {
        let mn = ops.mode_numbers(m);
        if mn.iter().all(|x| x.abs() <= band) {
            let r2 = (mn[0] * mn[0] + mn[1] * mn[1] + mn[2] * mn[2]) as f64;
            let amp = 1.0 / (1.0 + r2);
            sh.data_mut()[m] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
        }
    }
    ops.inverse(&sh)
}

pub fn random_scalar(ops: &Fourier, seed: u64, band: i64) -> ScalarField {
    band_limited(ops, &mut ChaCha8Rng::seed_from_u64(seed), band)
}

pub fn random_vector(ops: &Fourier, seed: u64, band: i64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..ops.grid().dim()).map(|_| band_limited(ops, &mut rng, band)).collect();
    VectorField::from_components(comps).expect("one component per axis")
}

/// Zero-mean solenoidal band-limited vector field.
pub fn random_solenoidal(op: &StokesOperator, seed: u64, band: i64) -> VectorField {
    op.project(&random_vector(op.fourier(), seed, band))
}

/// Band-limited field shifted and scaled so that its grid minimum is exactly
/// `min` and its maximum `min + spread`.
pub fn random_positive(ops: &Fourier, seed: u64, band: i64, min: f64, spread: f64) -> ScalarField {
    let r = random_scalar(ops, seed, band);
    let (lo, hi) = (r.min(), r.max());
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    r.map(|v| min + spread * (v - lo) / width)
}
