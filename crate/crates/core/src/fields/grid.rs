use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Uniform periodic box in two or three dimensions.
///
/// Unused axes of a 2D grid carry one point and unit length so that the
/// storage layout is always `[n0, n1, n2]`, row-major, last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    len: [f64; 3],
}

impl Grid {
    pub fn new(n_per_axis: &[usize], length_per_axis: &[f64]) -> Result<Self> {
        let dim = n_per_axis.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if length_per_axis.len() != dim {
            return Err(Error::InvalidGrid("one length per axis required".into()));
        }
        let mut n = [1usize; 3];
        let mut len = [1.0f64; 3];
        for a in 0..dim {
            let na = n_per_axis[a];
            if na < 2 || na % 2 != 0 {
                return Err(Error::InvalidGrid(format!("points per axis must be a positive even integer, got {na}")));
            }
            let la = length_per_axis[a];
            if !(la.is_finite() && la > 0.0) {
                return Err(Error::InvalidGrid(format!("box length must be positive, got {la}")));
            }
            n[a] = na;
            len[a] = la;
        }
        Ok(Self { dim, n, len })
    }

    /// Cubic box with the same resolution and length on every axis.
    pub fn cube(dim: usize, n: usize, length: f64) -> Result<Self> {
        Self::new(&vec![n; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    pub fn n_axis(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.len[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.len[axis] / self.n[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// Total number of grid points.
    pub fn size(&self) -> usize {
        self.n.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.len[a]).product()
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.n[1] + i[1]) * self.n[2] + i[2]
    }

    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let i2 = flat % self.n[2];
        let rest = flat / self.n[2];
        [rest / self.n[1], rest % self.n[1], i2]
    }

    /// Physical coordinates of a flat index; unused axes report 0.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let i = self.multi_index(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = i[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Iterator over the coordinates of every point in storage order.
    pub fn points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.size()).map(move |p| self.coords(p))
    }
}

/// Real scalar field sampled at the grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.size()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self { grid, values: grid.points().map(f).collect() }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::InvalidGrid(format!("expected {} values, got {}", grid.size(), values.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Periodic midpoint/trapezoidal rule: cell volume times the sum of samples.
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * self.sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(∫|s|^p)^(1/p)`; `p = f64::INFINITY` gives the maximum norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "lp_norm requires p >= 1, got {p}");
        if p.is_infinite() {
            return self.linf();
        }
        let s: f64 = if p == 2.0 {
            self.values.iter().map(|v| v * v).sum()
        } else {
            self.values.iter().map(|v| v.abs().powf(p)).sum()
        };
        (self.grid.cell_volume() * s).powf(1.0 / p)
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }
}

impl Add<&ScalarField> for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub<&ScalarField> for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<&ScalarField> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|a| a * rhs)
    }
}

/// Vector field with one scalar component per spatial dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, components: vec![ScalarField::zeros(grid); grid.dim()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let dim = grid.dim();
        let mut comps = vec![Vec::with_capacity(grid.size()); dim];
        for x in grid.points() {
            let v = f(x);
            for a in 0..dim {
                comps[a].push(v[a]);
            }
        }
        let components = comps.into_iter().map(|values| ScalarField { grid, values }).collect();
        Self { grid, components }
    }

    pub fn from_components(components: Vec<ScalarField>) -> Result<Self> {
        let grid =
            *components.first().ok_or_else(|| Error::InvalidGrid("vector field needs components".into()))?.grid();
        if components.len() != grid.dim() || components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut ScalarField {
        &mut self.components[axis]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    /// Pointwise squared Euclidean norm `|v|²`.
    pub fn norm_sq(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for c in &self.components {
            for (o, v) in out.values.iter_mut().zip(&c.values) {
                *o += v * v;
            }
        }
        out
    }

    /// Pointwise dot product `v·w`.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for (c, d) in self.components.iter().zip(&other.components) {
            for ((o, a), b) in out.values.iter_mut().zip(&c.values).zip(&d.values) {
                *o += a * b;
            }
        }
        out
    }

    /// `∫|v|²`
    pub fn l2_norm_sq(&self) -> f64 {
        self.norm_sq().integrate()
    }

    pub fn linf(&self) -> f64 {
        self.norm_sq().max().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.components.iter_mut().for_each(|c| c.scale(factor));
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect();
        VectorField { grid: self.grid, components }
    }

    /// Pointwise product with a scalar field.
    pub fn scaled_by(&self, s: &ScalarField) -> VectorField {
        let components = self.components.iter().map(|c| c * s).collect();
        VectorField { grid: self.grid, components }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_odd_and_bad_dimensions() {
        assert!(Grid::new(&[8, 7], &[1.0, 1.0]).is_err());
        assert!(Grid::new(&[8], &[1.0]).is_err());
        assert!(Grid::new(&[8, 8], &[1.0, -1.0]).is_err());
        let g = Grid::new(&[8, 4, 2], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.size(), 64);
        assert!((g.cell_volume() - 6.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(&[4, 6, 8], &[1.0; 3]).unwrap();
        for p in 0..g.size() {
            assert_eq!(g.index(g.multi_index(p)), p);
        }
    }

    #[test]
    fn integrate_constant_on_unit_torus() {
        let g = Grid::cube(2, 16, 1.0).unwrap();
        let s = ScalarField::constant(g, 3.0);
        assert!((s.integrate() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn l2_norm_of_sine() {
        let g = Grid::cube(2, 32, 1.0).unwrap();
        let s = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        let n2 = s.lp_norm(2.0);
        assert!((n2 * n2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn linf_picks_spike() {
        let g = Grid::cube(2, 8, 1.0).unwrap();
        let mut s = ScalarField::zeros(g);
        s.values_mut()[13] = 7.0;
        assert_eq!(s.linf(), 7.0);
        assert_eq!(s.lp_norm(f64::INFINITY), 7.0);
    }
}
