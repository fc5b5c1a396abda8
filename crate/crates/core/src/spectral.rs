//! Uniform-grid fast transforms, wavenumber grids and diagonal symbols.
//!
//! Three transform kinds are supported, each tied to one boundary condition:
//!
//! * [`TransformKind::Fft`] on [`BoundaryCondition::Periodic`] grids. Forward is the
//!   unnormalized DFT `X_k = Σ_j x_j e^{-2πi jk/N}`, inverse carries the `1/N`.
//! * [`TransformKind::Dst1`] on [`BoundaryCondition::DirichletInterior`] grids.
//!   Forward is `X_k = Σ_{j=1}^{N} x_j sin(π jk/(N+1))`, `k = 1..N`; the inverse is the
//!   same sum scaled by `2/(N+1)`.
//! * [`TransformKind::Dct`] on cell-centred [`BoundaryCondition::Neumann`] grids.
//!   Forward is DCT-II `X_k = Σ_j x_j cos(π k (j+½)/N)`; the inverse is DCT-III with
//!   weights `1/N` for `k = 0` and `2/N` otherwise.
//!
//! All 2-D transforms are separable products of the 1-D ones. Mode arrays use the same
//! row-major layout as fields (`index = i·ny + j`, `i` along x) and FFT modes are kept in
//! standard, non-shifted order.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{mismatch, Error, Result};
use crate::fields::ComplexField;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Boundary condition of a uniform grid; it fixes both the point layout and the
/// transform that diagonalizes constant-coefficient operators on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// `x_j = j·h`, `h = L/N`.
    Periodic,
    /// Interior points of a homogeneous Dirichlet box, `x_j = (j+1)·h`, `h = L/(N+1)`.
    DirichletInterior,
    /// Cell-centred points of a homogeneous Neumann box, `x_j = (j+½)·h`, `h = L/N`.
    Neumann,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            Self::Periodic => "periodic",
            Self::DirichletInterior => "dirichlet",
            Self::Neumann => "neumann",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(Self::Periodic),
            "dirichlet" | "dirichlet_interior" => Ok(Self::DirichletInterior),
            "neumann" => Ok(Self::Neumann),
            other => Err(Error::InvalidParameter(format!("unknown boundary condition '{other}'"))),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Uniform 2-D grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub bc: BoundaryCondition,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, bc: BoundaryCondition) -> Result<Self> {
        // Three interior points already span four Dirichlet intervals.
        let min = if bc == BoundaryCondition::DirichletInterior { 3 } else { 4 };
        if nx < min || ny < min {
            return Err(Error::InvalidGrid(format!("need nx, ny >= {min} for a {} grid, got {nx}x{ny}", bc.name())));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!("need lx, ly > 0, got {lx} x {ly}")));
        }
        Ok(Self { nx, ny, lx, ly, bc })
    }

    pub fn periodic(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(nx, ny, lx, ly, BoundaryCondition::Periodic)
    }

    /// `n × n` interior points of the unit square with homogeneous Dirichlet walls.
    pub fn unit_dirichlet(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0, BoundaryCondition::DirichletInterior)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        spacing(self.lx, self.nx, self.bc)
    }

    pub fn hy(&self) -> f64 {
        spacing(self.ly, self.ny, self.bc)
    }

    pub fn x(&self, i: usize) -> f64 {
        coordinate(i, self.hx(), self.bc)
    }

    pub fn y(&self, j: usize) -> f64 {
        coordinate(j, self.hy(), self.bc)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    /// Transform kind that diagonalizes constant-coefficient operators on this grid.
    pub fn natural_transform(&self) -> TransformKind {
        match self.bc {
            BoundaryCondition::Periodic => TransformKind::Fft,
            BoundaryCondition::DirichletInterior => TransformKind::Dst1,
            BoundaryCondition::Neumann => TransformKind::Dct,
        }
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn describe(&self) -> String {
        format!("{}x{} {} grid", self.nx, self.ny, self.bc)
    }
}

fn spacing(l: f64, n: usize, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::DirichletInterior => l / (n + 1) as f64,
        BoundaryCondition::Periodic | BoundaryCondition::Neumann => l / n as f64,
    }
}

fn coordinate(i: usize, h: f64, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Periodic => i as f64 * h,
        BoundaryCondition::DirichletInterior => (i + 1) as f64 * h,
        BoundaryCondition::Neumann => (i as f64 + 0.5) * h,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Fft,
    Dst1,
    Dct,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fft => "fft",
            Self::Dst1 => "dst1",
            Self::Dct => "dct",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fft" => Ok(Self::Fft),
            "dst1" | "dst" => Ok(Self::Dst1),
            "dct" => Ok(Self::Dct),
            other => Err(Error::InvalidParameter(format!("unknown transform kind '{other}'"))),
        }
    }

    fn boundary(self) -> BoundaryCondition {
        match self {
            Self::Fft => BoundaryCondition::Periodic,
            Self::Dst1 => BoundaryCondition::DirichletInterior,
            Self::Dct => BoundaryCondition::Neumann,
        }
    }

    pub fn check_grid(self, grid: &GridSpec) -> Result<()> {
        if self.boundary() != grid.bc {
            return Err(Error::IncompatibleTransform {
                kind: self.name().into(),
                bc: grid.bc.name().into(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Signed FFT mode number of storage index `k` (standard order).
pub fn fft_mode(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Per-axis physical wavenumbers in mode-array order.
///
/// Periodic: `ξ = 2πn/L`, `n ∈ {-N/2, …, N/2-1}`. Dirichlet: `ξ = pπ/L`, `p = 1..N`.
/// Neumann: `ξ = pπ/L`, `p = 0..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberGrid {
    pub xi_x: Vec<f64>,
    pub xi_y: Vec<f64>,
}

impl WavenumberGrid {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            xi_x: axis_wavenumbers(grid.nx, grid.lx, grid.bc),
            xi_y: axis_wavenumbers(grid.ny, grid.ly, grid.bc),
        }
    }

    /// Wavenumbers for first derivatives: as [`WavenumberGrid::new`] but with the
    /// unpaired Nyquist mode of even periodic axes set to zero, so that derivatives of
    /// real fields stay real.
    pub fn for_derivative(grid: &GridSpec) -> Self {
        let mut w = Self::new(grid);
        if grid.bc == BoundaryCondition::Periodic {
            if grid.nx % 2 == 0 {
                w.xi_x[grid.nx / 2] = 0.0;
            }
            if grid.ny % 2 == 0 {
                w.xi_y[grid.ny / 2] = 0.0;
            }
        }
        w
    }

    pub fn abs2(&self, i: usize, j: usize) -> f64 {
        self.xi_x[i] * self.xi_x[i] + self.xi_y[j] * self.xi_y[j]
    }
}

fn axis_wavenumbers(n: usize, l: f64, bc: BoundaryCondition) -> Vec<f64> {
    match bc {
        BoundaryCondition::Periodic => (0..n).map(|k| 2.0 * PI * fft_mode(k, n) as f64 / l).collect(),
        BoundaryCondition::DirichletInterior => (1..=n).map(|p| p as f64 * PI / l).collect(),
        BoundaryCondition::Neumann => (0..n).map(|p| p as f64 * PI / l).collect(),
    }
}

/// Per-mode complex multiplier of a transform-diagonal operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSymbol {
    pub values: Vec<Complex64>,
    pub kind: TransformKind,
    pub nx: usize,
    pub ny: usize,
}

impl SpectralSymbol {
    pub fn from_fn(grid: &GridSpec, kind: TransformKind, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                values.push(f(i, j));
            }
        }
        Self { values, kind, nx: grid.nx, ny: grid.ny }
    }

    pub fn constant(grid: &GridSpec, kind: TransformKind, value: Complex64) -> Self {
        Self { values: vec![value; grid.len()], kind, nx: grid.nx, ny: grid.ny }
    }

    pub fn min_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Fails when `min|λ| < 1e-14 · max|λ|`, i.e. when dividing would amplify a near-null
    /// mode (an undamped resonance).
    pub fn check_invertible(&self) -> Result<()> {
        let (min, max) = (self.min_modulus(), self.max_modulus());
        let threshold = 1e-14 * max;
        if !(min >= threshold) || max == 0.0 {
            return Err(Error::SingularSymbol { min, max, threshold });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind: self.kind,
            nx: self.nx,
            ny: self.ny,
        }
    }

    pub fn reciprocal(&self) -> Result<Self> {
        self.check_invertible()?;
        Ok(self.map(|v| v.inv()))
    }
}

/// Whether [`apply_symbol`] multiplies or divides by the symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolOp {
    Multiply,
    Divide,
}

/// One axis of a separable transform with cached FFT plans.
#[derive(Clone)]
struct AxisPlan {
    n: usize,
    kind: TransformKind,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl AxisPlan {
    fn new(planner: &mut FftPlanner<f64>, n: usize, kind: TransformKind) -> Self {
        let m = match kind {
            TransformKind::Fft => n,
            TransformKind::Dst1 => 2 * (n + 1),
            TransformKind::Dct => 2 * n,
        };
        Self {
            n,
            kind,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    fn work_len(&self) -> usize {
        self.fwd.len()
    }

    /// In-place forward transform of `line` (length `n`); `work` has length `work_len`.
    fn forward(&self, line: &mut [Complex64], work: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        match self.kind {
            TransformKind::Fft => self.fwd.process_with_scratch(line, scratch),
            TransformKind::Dst1 => {
                // odd extension [0, x, 0, -rev(x)]
                work[0] = Complex64::ZERO;
                work[n + 1] = Complex64::ZERO;
                for j in 0..n {
                    work[j + 1] = line[j];
                    work[2 * n + 1 - j] = -line[j];
                }
                self.fwd.process_with_scratch(work, scratch);
                for k in 0..n {
                    line[k] = 0.5 * I * work[k + 1];
                }
            }
            TransformKind::Dct => {
                // even extension [x, rev(x)]
                for j in 0..n {
                    work[j] = line[j];
                    work[2 * n - 1 - j] = line[j];
                }
                self.fwd.process_with_scratch(work, scratch);
                for k in 0..n {
                    let phase = Complex64::from_polar(0.5, -PI * k as f64 / (2 * n) as f64);
                    line[k] = phase * work[k];
                }
            }
        }
    }

    fn inverse(&self, line: &mut [Complex64], work: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        match self.kind {
            TransformKind::Fft => {
                self.inv.process_with_scratch(line, scratch);
                let s = 1.0 / n as f64;
                line.iter_mut().for_each(|v| *v *= s);
            }
            TransformKind::Dst1 => {
                self.forward(line, work, scratch);
                let s = 2.0 / (n + 1) as f64;
                line.iter_mut().for_each(|v| *v *= s);
            }
            TransformKind::Dct => {
                let nf = n as f64;
                work[0] = line[0] / nf;
                work[n] = Complex64::ZERO;
                for k in 1..n {
                    let a = line[k] * (2.0 / nf) * 0.5;
                    let theta = PI * k as f64 / (2.0 * nf);
                    work[k] = a * Complex64::from_polar(1.0, theta);
                    work[2 * n - k] = a * Complex64::from_polar(1.0, -theta);
                }
                self.inv.process_with_scratch(work, scratch);
                line.copy_from_slice(&work[..n]);
            }
        }
    }

    /// Adjoint of the inverse transform, `(T⁻¹)*`.
    fn inverse_adjoint(&self, line: &mut [Complex64], work: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        match self.kind {
            // F⁻¹ = F*/N, so (F⁻¹)* = F/N
            TransformKind::Fft => {
                self.forward(line, work, scratch);
                let s = 1.0 / n as f64;
                line.iter_mut().for_each(|v| *v *= s);
            }
            // S is real symmetric, so S⁻¹ is self-adjoint
            TransformKind::Dst1 => self.inverse(line, work, scratch),
            // C⁻¹ = Cᵀ·W, so (C⁻¹)* = W·C
            TransformKind::Dct => {
                self.forward(line, work, scratch);
                let nf = n as f64;
                line[0] /= nf;
                for v in line.iter_mut().skip(1) {
                    *v *= 2.0 / nf;
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
    InverseAdjoint,
}

/// Separable 2-D transform bound to a grid; plans are built once and shared.
#[derive(Clone)]
pub struct Transform2d {
    grid: GridSpec,
    kind: TransformKind,
    x: AxisPlan,
    y: AxisPlan,
}

impl fmt::Debug for Transform2d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform2d")
            .field("grid", &self.grid)
            .field("kind", &self.kind)
            .finish()
    }
}

impl Transform2d {
    pub fn new(grid: &GridSpec, kind: TransformKind) -> Result<Self> {
        kind.check_grid(grid)?;
        let mut planner = FftPlanner::new();
        let x = AxisPlan::new(&mut planner, grid.nx, kind);
        let y = AxisPlan::new(&mut planner, grid.ny, kind);
        Ok(Self { grid: *grid, kind, x, y })
    }

    /// Transform with the grid's natural kind.
    pub fn for_grid(grid: &GridSpec) -> Result<Self> {
        Self::new(grid, grid.natural_transform())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.grid.len() {
            return Err(mismatch(
                format!("{} values ({}x{})", self.grid.len(), self.grid.nx, self.grid.ny),
                format!("{len} values"),
            ));
        }
        Ok(())
    }

    fn run(&self, data: &mut [Complex64], dir: Direction) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let work_len = self.x.work_len().max(self.y.work_len());
        let scratch_len = [&self.x, &self.y]
            .iter()
            .map(|p| p.fwd.get_inplace_scratch_len().max(p.inv.get_inplace_scratch_len()))
            .max()
            .unwrap_or(0);
        let mut work = vec![Complex64::ZERO; work_len];
        let mut scratch = vec![Complex64::ZERO; scratch_len];
        let apply = |plan: &AxisPlan, line: &mut [Complex64], work: &mut [Complex64], scratch: &mut [Complex64]| {
            let w = &mut work[..plan.work_len()];
            match dir {
                Direction::Forward => plan.forward(line, w, scratch),
                Direction::Inverse => plan.inverse(line, w, scratch),
                Direction::InverseAdjoint => plan.inverse_adjoint(line, w, scratch),
            }
        };
        // y lines are contiguous
        for i in 0..nx {
            apply(&self.y, &mut data[i * ny..(i + 1) * ny], &mut work, &mut scratch);
        }
        let mut line = vec![Complex64::ZERO; nx];
        for j in 0..ny {
            for i in 0..nx {
                line[i] = data[i * ny + j];
            }
            apply(&self.x, &mut line, &mut work, &mut scratch);
            for i in 0..nx {
                data[i * ny + j] = line[i];
            }
        }
    }

    pub fn forward(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        let mut out = values.to_vec();
        self.run(&mut out, Direction::Forward);
        Ok(out)
    }

    pub fn inverse(&self, modes: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(modes.len())?;
        let mut out = modes.to_vec();
        self.run(&mut out, Direction::Inverse);
        Ok(out)
    }

    /// `(T⁻¹)* x`, needed to pull gradients back into mode space.
    pub fn inverse_adjoint(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        let mut out = values.to_vec();
        self.run(&mut out, Direction::InverseAdjoint);
        Ok(out)
    }

    pub fn forward_field(&self, field: &ComplexField) -> Result<Vec<Complex64>> {
        self.check_field(field)?;
        self.forward(field.data())
    }

    pub fn inverse_to_field(&self, modes: &[Complex64]) -> Result<ComplexField> {
        let data = self.inverse(modes)?;
        ComplexField::from_vec(self.grid, data)
    }

    pub(crate) fn check_field(&self, field: &ComplexField) -> Result<()> {
        if !field.grid().same_shape(&self.grid) || field.grid().bc != self.grid.bc {
            return Err(mismatch(self.grid.describe(), field.grid().describe()));
        }
        Ok(())
    }

    /// `T⁻¹ (λ ⊙ T x)` or `T⁻¹ (T x / λ)`.
    pub fn apply_symbol(&self, field: &ComplexField, symbol: &SpectralSymbol, op: SymbolOp) -> Result<ComplexField> {
        self.check_field(field)?;
        if symbol.kind != self.kind || symbol.nx != self.grid.nx || symbol.ny != self.grid.ny {
            return Err(mismatch(
                format!("{} symbol {}x{}", self.kind, self.grid.nx, self.grid.ny),
                format!("{} symbol {}x{}", symbol.kind, symbol.nx, symbol.ny),
            ));
        }
        if op == SymbolOp::Divide {
            symbol.check_invertible()?;
        }
        let mut data = field.data().to_vec();
        self.run(&mut data, Direction::Forward);
        match op {
            SymbolOp::Multiply => data.iter_mut().zip(&symbol.values).for_each(|(d, s)| *d *= s),
            SymbolOp::Divide => data.iter_mut().zip(&symbol.values).for_each(|(d, s)| *d /= s),
        }
        self.run(&mut data, Direction::Inverse);
        ComplexField::from_vec(self.grid, data)
    }

    /// Multiply by precomputed per-mode factors without the invertibility check.
    pub(crate) fn apply_diagonal(&self, field: &ComplexField, factors: &[Complex64]) -> Result<ComplexField> {
        self.check_field(field)?;
        let mut data = field.data().to_vec();
        self.run(&mut data, Direction::Forward);
        data.iter_mut().zip(factors).for_each(|(d, s)| *d *= s);
        self.run(&mut data, Direction::Inverse);
        ComplexField::from_vec(self.grid, data)
    }
}

/// Free-function form of [`Transform2d::forward`] for one-off use.
pub fn forward_transform(field: &ComplexField, kind: TransformKind) -> Result<Vec<Complex64>> {
    Transform2d::new(field.grid(), kind)?.forward_field(field)
}

pub fn inverse_transform(grid: &GridSpec, modes: &[Complex64], kind: TransformKind) -> Result<ComplexField> {
    Transform2d::new(grid, kind)?.inverse_to_field(modes)
}

/// Free-function form of [`Transform2d::apply_symbol`].
pub fn apply_symbol(field: &ComplexField, symbol: &SpectralSymbol, op: SymbolOp) -> Result<ComplexField> {
    Transform2d::new(field.grid(), symbol.kind)?.apply_symbol(field, symbol, op)
}

/// Symbol of the negative Laplacian in the grid's natural transform.
///
/// Periodic grids get the spectral symbol `|ξ|²`. Dirichlet and Neumann grids get the
/// eigenvalues of the five-point stencil, `(4/hx²) sin²(·) + (4/hy²) sin²(·)` with
/// arguments `pπ/(2(N+1))` (DST-I, `p = 1..N`) or `pπ/(2N)` (DCT-II, `p = 0..N-1`).
pub fn laplacian_symbol(grid: &GridSpec) -> SpectralSymbol {
    let kind = grid.natural_transform();
    match grid.bc {
        BoundaryCondition::Periodic => {
            let w = WavenumberGrid::new(grid);
            SpectralSymbol::from_fn(grid, kind, |i, j| Complex64::new(w.abs2(i, j), 0.0))
        }
        BoundaryCondition::DirichletInterior | BoundaryCondition::Neumann => {
            let ex = fdm_axis_eigenvalues(grid.nx, grid.hx(), grid.bc);
            let ey = fdm_axis_eigenvalues(grid.ny, grid.hy(), grid.bc);
            SpectralSymbol::from_fn(grid, kind, |i, j| Complex64::new(ex[i] + ey[j], 0.0))
        }
    }
}

/// Eigenvalues of the 1-D three-point `-d²/dx²` stencil in transform order.
fn fdm_axis_eigenvalues(n: usize, h: f64, bc: BoundaryCondition) -> Vec<f64> {
    let scale = 4.0 / (h * h);
    match bc {
        BoundaryCondition::DirichletInterior => (1..=n)
            .map(|p| scale * (p as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2))
            .collect(),
        BoundaryCondition::Neumann => (0..n)
            .map(|p| scale * (p as f64 * PI / (2.0 * n as f64)).sin().powi(2))
            .collect(),
        BoundaryCondition::Periodic => unreachable!("periodic grids use the spectral Laplacian"),
    }
}

/// 0/1 mask of the 2/3 de-aliasing rule: keeps FFT modes with `|n_α| ≤ N_α/3`.
pub fn dealias_mask(grid: &GridSpec) -> Vec<Complex64> {
    let keep = |k: usize, n: usize| 3 * fft_mode(k, n).unsigned_abs() as usize <= n;
    let mut mask = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let v = if keep(i, grid.nx) && keep(j, grid.ny) { 1.0 } else { 0.0 };
            mask.push(Complex64::new(v, 0.0));
        }
    }
    mask
}

/// Spectral first derivatives `(∂/∂x, ∂/∂y)` of a periodic field.
pub fn spectral_gradient(transform: &Transform2d, field: &ComplexField) -> Result<(ComplexField, ComplexField)> {
    let grid = transform.grid();
    if grid.bc != BoundaryCondition::Periodic {
        return Err(Error::IncompatibleTransform { kind: "spectral derivative".into(), bc: grid.bc.name().into() });
    }
    let w = WavenumberGrid::for_derivative(grid);
    let modes = transform.forward_field(field)?;
    let mut dx = modes.clone();
    let mut dy = modes;
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let k = grid.index(i, j);
            dx[k] *= I * w.xi_x[i];
            dy[k] *= I * w.xi_y[j];
        }
    }
    Ok((transform.inverse_to_field(&dx)?, transform.inverse_to_field(&dy)?))
}

/// Spectral divergence `∂a/∂x + ∂b/∂y` of a periodic vector field.
pub fn spectral_divergence(transform: &Transform2d, a: &ComplexField, b: &ComplexField) -> Result<ComplexField> {
    let grid = transform.grid();
    let w = WavenumberGrid::for_derivative(grid);
    let ma = transform.forward_field(a)?;
    let mb = transform.forward_field(b)?;
    let mut out = vec![Complex64::ZERO; grid.len()];
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let k = grid.index(i, j);
            out[k] = I * (w.xi_x[i] * ma[k] + w.xi_y[j] * mb[k]);
        }
    }
    transform.inverse_to_field(&out)
}
