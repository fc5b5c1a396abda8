use num_complex::Complex64;

use super::{check_grid, pointwise, Family, ReferenceOperator, SplitProblem};
use crate::error::{Error, Result};
use crate::fields::{ComplexField, RealField};
use crate::spectral::{laplacian_symbol, BoundaryCondition, GridSpec, SpectralSymbol, Transform2d, TransformKind};

/// Overrides for the background wavenumber and the damping shift.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HelmholtzOptions {
    pub k0_sq: Option<f64>,
    pub eta: Option<f64>,
}

/// `−Δu − k(x)² u = f` on a periodic grid with the spectral Laplacian, split around the
/// shifted Laplacian `L_η = −Δ − (k0² + iη)`.
///
/// Absorption is folded into the coefficient, `k² → k²(1 + i d)`, so the sponge ends up
/// in `V = k² − k0² − iη`.
#[derive(Debug, Clone)]
pub struct HelmholtzProblem {
    grid: GridSpec,
    k2: ComplexField,
    k0_sq: f64,
    eta: f64,
    laplacian: Vec<Complex64>,
    v: Vec<Complex64>,
    reference: ReferenceOperator,
}

impl HelmholtzProblem {
    /// Explicit `k²`, `k0²` and `η`.
    pub fn new(k2: ComplexField, k0_sq: f64, eta: f64) -> Result<Self> {
        let grid = *k2.grid();
        if grid.bc != BoundaryCondition::Periodic {
            return Err(Error::IncompatibleTransform { kind: "helmholtz (fft)".into(), bc: grid.bc.name().into() });
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
        }
        if !k0_sq.is_finite() || !k2.is_finite() {
            return Err(Error::NonFinite("helmholtz coefficients".into()));
        }
        let lap = laplacian_symbol(&grid);
        let shift = Complex64::new(k0_sq, eta);
        let symbol = lap.map(|l| l - shift);
        let reference = ReferenceOperator::new(Transform2d::new(&grid, TransformKind::Fft)?, symbol)?;
        let v = k2.data().iter().map(|&k| k - shift).collect();
        Ok(Self { grid, k2, k0_sq, eta, laplacian: lap.values, v, reference })
    }

    /// Builds `k² (1 + i d)` from a real wavenumber field and optional sponge `d`, filling
    /// in defaults: `k0²` is the mean of `Re k²` over points without damping, and
    /// `η = 1.05 · max |k² − k0²|`.
    pub fn from_wavenumber(k: &RealField, damping: Option<&RealField>, opts: HelmholtzOptions) -> Result<Self> {
        let grid = *k.grid();
        if let Some(d) = damping {
            if !d.grid().same_shape(&grid) {
                return Err(crate::error::mismatch(grid.describe(), d.grid().describe()));
            }
        }
        let k2 = ComplexField::from_vec(
            grid,
            k.data()
                .iter()
                .enumerate()
                .map(|(idx, &kv)| {
                    let d = damping.map_or(0.0, |d| d.data()[idx]);
                    Complex64::new(kv * kv, kv * kv * d)
                })
                .collect(),
        )?;
        let k0_sq = match opts.k0_sq {
            Some(v) => v,
            None => {
                let interior: Vec<f64> = k2
                    .data()
                    .iter()
                    .enumerate()
                    .filter(|&(idx, _)| damping.is_none_or(|d| d.data()[idx] == 0.0))
                    .map(|(_, v)| v.re)
                    .collect();
                if interior.is_empty() {
                    k2.data().iter().map(|v| v.re).sum::<f64>() / k2.len() as f64
                } else {
                    interior.iter().sum::<f64>() / interior.len() as f64
                }
            }
        };
        let eta = opts.eta.unwrap_or_else(|| default_eta(&k2, k0_sq));
        Self::new(k2, k0_sq, eta)
    }

    /// `k = ω / c` for a velocity model `c`.
    pub fn from_velocity(c: &RealField, omega: f64, damping: Option<&RealField>, opts: HelmholtzOptions) -> Result<Self> {
        if c.min() <= 0.0 {
            return Err(Error::InvalidParameter("velocity must be positive".into()));
        }
        Self::from_wavenumber(&c.map(|v| omega / v), damping, opts)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn k2(&self) -> &ComplexField {
        &self.k2
    }

    pub fn k0_sq(&self) -> f64 {
        self.k0_sq
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn symbol(&self) -> &SpectralSymbol {
        self.reference.symbol()
    }

    /// Same medium with a different shift, e.g. for an `η` sweep.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.k2.clone(), self.k0_sq, eta)
    }
}

/// `1.05 · max |k² − k0²|`, or `0.05 · max(k0², 1)` when the medium is exactly uniform.
fn default_eta(k2: &ComplexField, k0_sq: f64) -> f64 {
    let spread = k2.data().iter().map(|&v| (v - k0_sq).norm()).fold(0.0, f64::max);
    if spread > 0.0 {
        1.05 * spread
    } else {
        0.05 * k0_sq.abs().max(1.0)
    }
}

impl SplitProblem for HelmholtzProblem {
    fn family(&self) -> Family {
        Family::Helmholtz
    }

    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn reference(&self) -> &ReferenceOperator {
        &self.reference
    }

    fn apply_a(&self, u: &ComplexField) -> Result<ComplexField> {
        check_grid(&self.grid, u)?;
        let mut out = self.reference.transform().apply_diagonal(u, &self.laplacian)?;
        out.data_mut()
            .iter_mut()
            .zip(u.data().iter().zip(self.k2.data()))
            .for_each(|(o, (uv, k))| *o -= k * uv);
        Ok(out)
    }

    fn apply_v(&self, u: &ComplexField) -> Result<ComplexField> {
        check_grid(&self.grid, u)?;
        Ok(pointwise(u, &self.v))
    }

    fn apply_a_adjoint(&self, u: &ComplexField) -> Result<ComplexField> {
        check_grid(&self.grid, u)?;
        let mut out = self.reference.transform().apply_diagonal(u, &self.laplacian)?;
        out.data_mut()
            .iter_mut()
            .zip(u.data().iter().zip(self.k2.data()))
            .for_each(|(o, (uv, k))| *o -= k.conj() * uv);
        Ok(out)
    }

    fn apply_v_adjoint(&self, u: &ComplexField) -> Result<ComplexField> {
        check_grid(&self.grid, u)?;
        let conj: Vec<_> = self.v.iter().map(|v| v.conj()).collect();
        Ok(pointwise(u, &conj))
    }
}
