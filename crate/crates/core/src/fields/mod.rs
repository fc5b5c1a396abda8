//! Field containers, deterministic samplers and the binary field format.

mod io;
mod random;

pub use io::{read_field, read_field_file, write_complex_csv, write_field, write_field_file, write_real_csv, FieldData};
pub use random::{
    gaussian_bump, layered_velocity, sample_grf, sine_noise, sine_series, sponge_profile, stream_velocity, LayeredMedium,
};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{mismatch, Error, Result};
use crate::spectral::GridSpec;

/// Complex scalar field on a uniform grid; carries states, sources and residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: *grid, data: vec![Complex64::ZERO; grid.len()] }
    }

    pub fn constant(grid: &GridSpec, value: Complex64) -> Self {
        Self { grid: *grid, data: vec![value; grid.len()] }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(mismatch(grid.len(), data.len()));
        }
        Ok(Self { grid, data })
    }

    /// Samples `f(x, y)` at the grid points.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.ny {
                data.push(f(x, grid.y(j)));
            }
        }
        Self { grid: *grid, data }
    }

    /// Complex white noise with independent standard normal real and imaginary parts.
    pub fn random_normal(grid: &GridSpec, rng: &mut RngState) -> Self {
        let data = (0..grid.len())
            .map(|_| Complex64::new(rng.normal(), rng.normal()))
            .collect();
        Self { grid: *grid, data }
    }

    /// Unit vector `e_k` in the flattened layout.
    pub fn unit(grid: &GridSpec, k: usize) -> Self {
        let mut f = Self::zeros(grid);
        f.data[k] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.grid.index(i, j)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Euclidean norm of the flattened vector.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `⟨self, other⟩ = Σ conj(self)·other`.
    pub fn dot(&self, other: &ComplexField) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn check_same(&self, other: &ComplexField) -> Result<()> {
        if !self.grid.same_shape(&other.grid) {
            return Err(mismatch(self.grid.describe(), other.grid.describe()));
        }
        Ok(())
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ComplexField) -> Result<ComplexField> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(&self, other: &ComplexField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<ComplexField> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, data })
    }

    pub fn scale(&self, s: Complex64) -> ComplexField {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        Self { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: Complex64, x: &ComplexField) -> Result<()> {
        self.check_same(x)?;
        self.data.iter_mut().zip(&x.data).for_each(|(s, v)| *s += a * v);
        Ok(())
    }

    pub fn real_part(&self) -> RealField {
        RealField { grid: self.grid, data: self.data.iter().map(|v| v.re).collect() }
    }
}

/// Real scalar field; used for coefficients (wavenumber, diffusivity, velocity, damping).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: *grid, data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        Self { grid: *grid, data: vec![value; grid.len()] }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(mismatch(grid.len(), data.len()));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("real field entry {bad}")));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.ny {
                data.push(f(x, grid.y(j)));
            }
        }
        Self { grid: *grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.index(i, j)]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        Self { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        if !self.grid.same_shape(&other.grid) {
            return Err(mismatch(self.grid.describe(), other.grid.describe()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, data })
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Same values reinterpreted on another grid of identical shape.
    pub fn with_grid(mut self, grid: &GridSpec) -> Result<RealField> {
        if !self.grid.same_shape(grid) {
            return Err(mismatch(self.grid.describe(), grid.describe()));
        }
        self.grid = *grid;
        Ok(self)
    }
}

/// Seeded ChaCha stream. The same seed always yields the same sequence of fields.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream `index`, a pure function of `(seed, index)`.
    pub fn split(&self, index: u64) -> RngState {
        Self::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15))))
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
