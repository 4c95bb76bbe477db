//! Fourier transforms and spectral differential operators on the periodic box.
//!
//! Coefficients are normalized so that `data[0]` is the mean of the field.
//! Odd-order derivatives use wavenumbers with the Nyquist mode zeroed; even
//! symbols (`-|k|²`, diagonal Hessian entries) keep it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{Grid, ScalarField, VectorField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex Fourier coefficients of a real field, in FFT storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: vec![ZERO; grid.size()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Mean value of the represented field.
    pub fn mean(&self) -> f64 {
        self.data[0].re
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Spectrum) {
        for (z, w) in self.data.iter_mut().zip(&other.data) {
            *z += w * a;
        }
    }

    /// Multiply every mode by a real symbol indexed by flat mode number.
    pub fn apply_symbol(&mut self, symbol: impl Fn(usize) -> f64) {
        for (m, z) in self.data.iter_mut().enumerate() {
            *z *= symbol(m);
        }
    }
}

/// Precomputed FFT plans and wavenumber tables for one grid.
///
/// Immutable after construction and shareable between threads.
pub struct Fourier {
    grid: Grid,
    forward: [Option<Arc<dyn Fft<f64>>>; 3],
    inverse: [Option<Arc<dyn Fft<f64>>>; 3],
    k: [Vec<f64>; 3],
    k_odd: [Vec<f64>; 3],
    keep: [Vec<bool>; 3],
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let shape = grid.shape();
        let mut forward: [Option<Arc<dyn Fft<f64>>>; 3] = [None, None, None];
        let mut inverse: [Option<Arc<dyn Fft<f64>>>; 3] = [None, None, None];
        let mut k: [Vec<f64>; 3] = Default::default();
        let mut k_odd: [Vec<f64>; 3] = Default::default();
        let mut keep: [Vec<bool>; 3] = Default::default();
        for a in 0..3 {
            let n = shape[a];
            if a < grid.dim() {
                forward[a] = Some(planner.plan_fft_forward(n));
                inverse[a] = Some(planner.plan_fft_inverse(n));
            }
            let base = 2.0 * PI / grid.length(a);
            for j in 0..n {
                let m = mode_number(j, n);
                k[a].push(base * m as f64);
                let nyquist = n > 1 && 2 * j == n;
                k_odd[a].push(if nyquist { 0.0 } else { base * m as f64 });
                keep[a].push(n == 1 || 3 * m.unsigned_abs() <= n as u64);
            }
        }
        Self { grid, forward, inverse, k, k_odd, keep }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Integer mode numbers of a flat spectral index.
    pub fn mode_numbers(&self, flat: usize) -> [i64; 3] {
        let shape = self.grid.shape();
        let i = self.grid.multi_index(flat);
        [mode_number(i[0], shape[0]), mode_number(i[1], shape[1]), mode_number(i[2], shape[2])]
    }

    /// Full wavenumber vector (Nyquist kept, as a negative frequency).
    #[inline]
    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let i = self.grid.multi_index(flat);
        [self.k[0][i[0]], self.k[1][i[1]], self.k[2][i[2]]]
    }

    /// Wavenumber vector used by odd derivatives (Nyquist zeroed).
    #[inline]
    pub fn odd_wavevector(&self, flat: usize) -> [f64; 3] {
        let i = self.grid.multi_index(flat);
        [self.k_odd[0][i[0]], self.k_odd[1][i[1]], self.k_odd[2][i[2]]]
    }

    /// `|k|²` of the full wavevector.
    #[inline]
    pub fn k_sq(&self, flat: usize) -> f64 {
        let k = self.wavevector(flat);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Whether a mode survives the two-thirds truncation.
    #[inline]
    pub fn is_resolved(&self, flat: usize) -> bool {
        let i = self.grid.multi_index(flat);
        self.keep[0][i[0]] && self.keep[1][i[1]] && self.keep[2][i[2]]
    }

    pub fn forward(&self, s: &ScalarField) -> Spectrum {
        debug_assert_eq!(*s.grid(), self.grid);
        let mut data: Vec<Complex64> = s.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        let inv_n = 1.0 / self.grid.size() as f64;
        data.iter_mut().for_each(|z| *z *= inv_n);
        Spectrum { grid: self.grid, data }
    }

    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        let mut data = s.data.clone();
        self.transform(&mut data, &self.inverse);
        let values = data.into_iter().map(|z| z.re).collect();
        ScalarField::from_values(self.grid, values).expect("spectrum has grid size")
    }

    pub fn forward_vec(&self, v: &VectorField) -> Vec<Spectrum> {
        v.components().iter().map(|c| self.forward(c)).collect()
    }

    pub fn inverse_vec(&self, s: &[Spectrum]) -> VectorField {
        VectorField::from_components(s.iter().map(|c| self.inverse(c)).collect()).expect("one spectrum per axis")
    }

    /// Spectral `∂_axis` applied in coefficient space.
    pub fn derivative(&self, s: &Spectrum, axis: usize) -> Spectrum {
        let mut out = s.clone();
        for (m, z) in out.data.iter_mut().enumerate() {
            let k = self.odd_wavevector(m)[axis];
            *z = Complex64::new(-k * z.im, k * z.re);
        }
        out
    }

    /// `Σ_a i k_a v̂_a`
    pub fn divergence_spec(&self, v: &[Spectrum]) -> Spectrum {
        let mut out = Spectrum::zeros(self.grid);
        for (m, z) in out.data.iter_mut().enumerate() {
            let k = self.odd_wavevector(m);
            let mut acc = ZERO;
            for (a, va) in v.iter().enumerate() {
                acc += va.data[m] * k[a];
            }
            *z = Complex64::new(-acc.im, acc.re);
        }
        out
    }

    pub fn gradient(&self, s: &ScalarField) -> VectorField {
        let sh = self.forward(s);
        self.gradient_spec(&sh)
    }

    pub fn gradient_spec(&self, sh: &Spectrum) -> VectorField {
        let comps = (0..self.grid.dim()).map(|a| self.inverse(&self.derivative(sh, a))).collect();
        VectorField::from_components(comps).expect("one component per axis")
    }

    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        self.inverse(&self.divergence_spec(&self.forward_vec(v)))
    }

    pub fn laplacian(&self, s: &ScalarField) -> ScalarField {
        let mut sh = self.forward(s);
        sh.apply_symbol(|m| -self.k_sq(m));
        self.inverse(&sh)
    }

    /// Second derivatives `∂_i ∂_j s`; entry `(i, j)` is the same field as `(j, i)`.
    pub fn hessian(&self, s: &ScalarField) -> Vec<Vec<ScalarField>> {
        let sh = self.forward(s);
        self.hessian_spec(&sh)
    }

    pub fn hessian_spec(&self, sh: &Spectrum) -> Vec<Vec<ScalarField>> {
        let dim = self.grid.dim();
        let mut out: Vec<Vec<Option<ScalarField>>> = vec![vec![None; dim]; dim];
        for i in 0..dim {
            for j in i..dim {
                let mut d = sh.clone();
                d.apply_symbol(|m| {
                    if i == j {
                        let k = self.wavevector(m)[i];
                        -k * k
                    } else {
                        let k = self.odd_wavevector(m);
                        -k[i] * k[j]
                    }
                });
                let field = self.inverse(&d);
                out[j][i] = Some(field.clone());
                out[i][j] = Some(field);
            }
        }
        out.into_iter().map(|row| row.into_iter().map(|f| f.expect("filled")).collect()).collect()
    }

    /// Zero every mode outside the two-thirds band.
    pub fn dealias(&self, s: &mut Spectrum) {
        for (m, z) in s.data.iter_mut().enumerate() {
            if !self.is_resolved(m) {
                *z = ZERO;
            }
        }
    }

    /// Parseval energy `|Ω| Σ |ŝ_k|²`, equal to `∫ s²`.
    pub fn spectral_energy(&self, s: &Spectrum) -> f64 {
        self.grid.volume() * s.data.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Option<Arc<dyn Fft<f64>>>; 3]) {
        let shape = self.grid.shape();
        for (axis, plan) in plans.iter().enumerate() {
            let Some(plan) = plan else { continue };
            let na = shape[axis];
            let stride: usize = shape[axis + 1..].iter().product();
            let outer: usize = shape[..axis].iter().product();
            let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let mut buf = vec![ZERO; data.len()];
            for o in 0..outer {
                for j in 0..na {
                    let src = o * na * stride + j * stride;
                    for i in 0..stride {
                        buf[(o * stride + i) * na + j] = data[src + i];
                    }
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for o in 0..outer {
                for j in 0..na {
                    let dst = o * na * stride + j * stride;
                    for i in 0..stride {
                        data[dst + i] = buf[(o * stride + i) * na + j];
                    }
                }
            }
        }
    }
}

fn mode_number(j: usize, n: usize) -> i64 {
    if 2 * j < n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}
