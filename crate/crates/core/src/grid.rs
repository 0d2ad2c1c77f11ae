//! Periodic uniform grids in one and two dimensions, the sampled fields that
//! live on them, and FFT-based differentiation and quadrature.
//!
//! Fields are stored row-major: in 2D the value at `(x_i, y_j)` sits at index
//! `i * n + j`, so axis 0 is the slow (x) axis and axis 1 the contiguous (y)
//! axis.
//!
//! Spectral derivatives use the symmetric wavenumber layout
//! `k ∈ {−N/2+1, …, N/2}·(2π/L)`. The Nyquist mode is dropped from odd-order
//! derivatives and kept (as `−(N/2·2π/L)²`) in second derivatives, so applying
//! the first derivative twice differs from the second derivative only in that
//! one mode.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, L)^dimension`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dimension: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dimension: usize, n: usize, length: f64) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 points per axis, got {n}")));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("points per axis must be even, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self { dimension, n, length })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points, `N^dimension`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one grid point, `dx^dimension`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dimension as i32)
    }

    /// Coordinates `x_i = i·dx` along one axis.
    pub fn coords(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|i| i as f64 * dx).collect()
    }

    /// Angular wavenumbers in FFT order: `0, 1, …, N/2, −N/2+1, …, −1`
    /// times `2π/L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let base = 2.0 * PI / self.length;
        let n = self.n as i64;
        (0..n)
            .map(|j| if j <= n / 2 { j } else { j - n } as f64 * base)
            .collect()
    }

    /// The one-dimensional grid with the same axis layout.
    pub fn axis(&self) -> Grid {
        Grid { dimension: 1, ..*self }
    }

    /// The two-dimensional grid whose axes both equal this grid's axis.
    pub fn square(&self) -> Grid {
        Grid { dimension: 2, ..*self }
    }

    /// Multi-index `(i, j)` of a flat index; `j` is 0 in 1D.
    pub fn unflatten(&self, index: usize) -> (usize, usize) {
        match self.dimension {
            1 => (index, 0),
            _ => (index / self.n, index % self.n),
        }
    }

    /// Physical coordinates of a flat index (second entry 0 in 1D).
    pub fn point(&self, index: usize) -> (f64, f64) {
        let (i, j) = self.unflatten(index);
        let dx = self.dx();
        (i as f64 * dx, j as f64 * dx)
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dimension {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for a {}D grid",
                self.dimension
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Shorthand for [`Grid::new`].
pub fn make_grid(dimension: usize, n: usize, length: f64) -> Result<Grid> {
    Grid::new(dimension, n, length)
}

/// Real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

/// Complex samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl RealField {
    /// Wraps `values`, checking shape and finiteness.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("real field".into()));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f(x, y)` at every grid point (`y = 0` in 1D).
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
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

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_raw(
            self.grid,
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

impl ComplexField {
    /// Wraps `values`, checking shape and finiteness.
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("complex field".into()));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f(x, y)` at every grid point (`y = 0` in 1D).
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `‖ψ‖² = ∫|ψ|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩ = ∫ conj(self)·other`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    /// Grid-weighted L² distance `‖self − other‖`.
    pub fn l2_distance(&self, other: &ComplexField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((sum * self.grid.cell_volume()).sqrt())
    }

    /// Pointwise maximum of `|self − other|`.
    pub fn max_distance(&self, other: &ComplexField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexField {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }

    /// Copy rescaled to unit norm. A zero field is returned unchanged.
    pub fn normalized(&self) -> ComplexField {
        let norm = self.norm();
        if norm == 0.0 {
            return self.clone();
        }
        self.scaled(Complex64::new(1.0 / norm, 0.0))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// In-place unnormalized FFT of every axis of `data` laid out on `grid`.
fn fft_all_axes(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n;
    let fft = plan(n, inverse);
    match grid.dimension {
        1 => fft.process(data),
        _ => {
            // rows (axis 1) are contiguous
            fft.process(data);
            // columns (axis 0) via a transpose
            let mut scratch = vec![Complex64::new(0.0, 0.0); data.len()];
            transpose(data, &mut scratch, n);
            fft.process(&mut scratch);
            transpose(&scratch, data, n);
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

/// Fourier coefficients of a field, ready for repeated spectral
/// multiplication.
pub(crate) struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
    k: Vec<f64>,
}

impl Spectrum {
    pub(crate) fn of_complex(f: &ComplexField) -> Self {
        let mut coeffs = f.values.clone();
        fft_all_axes(&f.grid, &mut coeffs, false);
        Spectrum { grid: f.grid, coeffs, k: f.grid.wavenumbers() }
    }

    pub(crate) fn of_real(f: &RealField) -> Self {
        Self::of_complex(&f.to_complex())
    }

    /// Wavenumber of flat index `idx` along `axis`.
    fn k_along(&self, idx: usize, axis: usize) -> (f64, bool) {
        let (i, j) = self.grid.unflatten(idx);
        let m = if axis == 0 { i } else { j };
        (self.k[m], m == self.grid.n / 2)
    }

    /// `|k|²` summed over all axes at flat index `idx`.
    pub(crate) fn k_squared(&self, idx: usize) -> f64 {
        (0..self.grid.dimension).map(|a| self.k_along(idx, a).0.powi(2)).sum()
    }

    /// Inverse transform of the coefficients times `multiplier(idx)`.
    pub(crate) fn inverse(&self, multiplier: impl Fn(usize) -> Complex64) -> ComplexField {
        let mut data: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| c * multiplier(idx))
            .collect();
        fft_all_axes(&self.grid, &mut data, true);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
        ComplexField::from_raw(self.grid, data)
    }

    pub(crate) fn derivative(&self, axis: usize, order: u32) -> ComplexField {
        self.inverse(|idx| {
            let (k, nyquist) = self.k_along(idx, axis);
            match order {
                1 if nyquist => Complex64::new(0.0, 0.0),
                1 => Complex64::new(0.0, k),
                _ => Complex64::new(-k * k, 0.0),
            }
        })
    }

    pub(crate) fn laplacian(&self) -> ComplexField {
        self.inverse(|idx| Complex64::new(-self.k_squared(idx), 0.0))
    }
}

/// Spectral derivative of order 1 or 2 along `axis`.
pub fn differentiate(f: &ComplexField, axis: usize, order: u32) -> Result<ComplexField> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    f.grid.check_axis(axis)?;
    Ok(Spectrum::of_complex(f).derivative(axis, order))
}

/// Spectral Laplacian (sum of second derivatives over all axes).
pub fn laplacian(f: &ComplexField) -> ComplexField {
    Spectrum::of_complex(f).laplacian()
}

pub(crate) fn real_part(f: ComplexField) -> RealField {
    let grid = f.grid;
    RealField::from_raw(grid, f.values.into_iter().map(|v| v.re).collect())
}

/// Spectral gradient of a real field, one component per axis.
pub fn gradient_real(f: &RealField) -> Vec<RealField> {
    let spec = Spectrum::of_real(f);
    (0..f.grid.dimension)
        .map(|a| real_part(spec.derivative(a, 1)))
        .collect()
}

pub fn laplacian_real(f: &RealField) -> RealField {
    real_part(Spectrum::of_real(f).laplacian())
}

/// Spectral divergence of a vector field given as one component per axis.
pub fn divergence(components: &[RealField]) -> Result<RealField> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidArgument("divergence of an empty vector field".into()))?;
    let grid = first.grid;
    if components.len() != grid.dimension {
        return Err(Error::InvalidArgument(format!(
            "{} components for a {}D grid",
            components.len(),
            grid.dimension
        )));
    }
    let mut total = vec![0.0; grid.len()];
    for (axis, c) in components.iter().enumerate() {
        grid.ensure_same(&c.grid)?;
        let d = Spectrum::of_real(c).derivative(axis, 1);
        total.iter_mut().zip(d.values).for_each(|(t, v)| *t += v.re);
    }
    Ok(RealField::from_raw(grid, total))
}

/// Rectangle-rule quadrature `Σ f(x_i)·dx^d`, spectrally accurate for
/// smooth periodic integrands.
pub fn integrate(f: &RealField) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_volume()
}
