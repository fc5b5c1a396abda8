use num_complex::Complex64;

use super::{check_grid, Family, ReferenceOperator, SplitProblem};
use crate::error::{mismatch, Error, Result};
use crate::fields::{ComplexField, RealField};
use crate::spectral::{dealias_mask, BoundaryCondition, GridSpec, SpectralSymbol, Transform2d, TransformKind, WavenumberGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Variable coefficients of `−∇·(κ∇u) + v·∇u + σu = f`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdrCoefficients {
    pub kappa: RealField,
    pub vx: RealField,
    pub vy: RealField,
    pub sigma: RealField,
}

/// Reference constants. Unset values default to the midrange of `κ` and `σ` and the
/// mean of `v`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CdrOptions {
    pub kappa0: Option<f64>,
    pub v0: Option<(f64, f64)>,
    pub sigma0: Option<f64>,
    pub dealias: bool,
}

/// Convection-diffusion-reaction on a periodic grid, split around the constant
/// coefficient operator `L0 = −κ0Δ + v0·∇ + σ0` with symbol `κ0|ξ|² + i v0·ξ + σ0`.
///
/// The remainder is `V = ∇·(δκ∇) − δv·∇ − δσ`, evaluated with spectral derivatives and
/// pointwise products. With de-aliasing enabled it becomes `P V P` for the 2/3 mode
/// projector `P`. First derivatives drop the Nyquist mode, and so does `v0·ξ`.
#[derive(Debug, Clone)]
pub struct CdrProblem {
    grid: GridSpec,
    coeffs: CdrCoefficients,
    kappa0: f64,
    v0: (f64, f64),
    sigma0: f64,
    dkappa: Vec<f64>,
    dvx: Vec<f64>,
    dvy: Vec<f64>,
    dsigma: Vec<f64>,
    deriv: WavenumberGrid,
    mask: Option<Vec<Complex64>>,
    reference: ReferenceOperator,
}

fn midrange(f: &RealField) -> f64 {
    0.5 * (f.min() + f.max())
}

impl CdrProblem {
    pub fn new(coeffs: CdrCoefficients, opts: CdrOptions) -> Result<Self> {
        let grid = *coeffs.kappa.grid();
        if grid.bc != BoundaryCondition::Periodic {
            return Err(Error::IncompatibleTransform { kind: "cdr (fft)".into(), bc: grid.bc.name().into() });
        }
        for f in [&coeffs.vx, &coeffs.vy, &coeffs.sigma] {
            if !f.grid().same_shape(&grid) {
                return Err(mismatch(grid.describe(), f.grid().describe()));
            }
        }
        let kappa0 = opts.kappa0.unwrap_or_else(|| midrange(&coeffs.kappa));
        let v0 = opts.v0.unwrap_or_else(|| (coeffs.vx.mean(), coeffs.vy.mean()));
        let sigma0 = opts.sigma0.unwrap_or_else(|| midrange(&coeffs.sigma));
        if kappa0 < 0.0 || sigma0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reference constants must be non-negative (kappa0 = {kappa0}, sigma0 = {sigma0})"
            )));
        }
        let deriv = WavenumberGrid::for_derivative(&grid);
        let lap = WavenumberGrid::new(&grid);
        let symbol = SpectralSymbol::from_fn(&grid, TransformKind::Fft, |i, j| {
            Complex64::new(kappa0 * lap.abs2(i, j) + sigma0, v0.0 * deriv.xi_x[i] + v0.1 * deriv.xi_y[j])
        });
        let reference = ReferenceOperator::new(Transform2d::new(&grid, TransformKind::Fft)?, symbol)?;
        let delta = |f: &RealField, c: f64| f.data().iter().map(|v| v - c).collect::<Vec<_>>();
        Ok(Self {
            dkappa: delta(&coeffs.kappa, kappa0),
            dvx: delta(&coeffs.vx, v0.0),
            dvy: delta(&coeffs.vy, v0.1),
            dsigma: delta(&coeffs.sigma, sigma0),
            mask: opts.dealias.then(|| dealias_mask(&grid)),
            grid,
            coeffs,
            kappa0,
            v0,
            sigma0,
            deriv,
            reference,
        })
    }

    pub fn coefficients(&self) -> &CdrCoefficients {
        &self.coeffs
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn v0(&self) -> (f64, f64) {
        self.v0
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn dealias(&self) -> bool {
        self.mask.is_some()
    }

    pub fn symbol(&self) -> &SpectralSymbol {
        self.reference.symbol()
    }

    fn t(&self) -> &Transform2d {
        self.reference.transform()
    }

    fn project(&self, modes: &mut [Complex64]) {
        if let Some(mask) = &self.mask {
            modes.iter_mut().zip(mask).for_each(|(m, p)| *m *= p);
        }
    }

    /// Spectral gradient of the mode array `modes`, returned in physical space.
    fn gradient(&self, modes: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut dx = modes.to_vec();
        let mut dy = modes.to_vec();
        for i in 0..nx {
            for j in 0..ny {
                let k = i * ny + j;
                dx[k] *= I * self.deriv.xi_x[i];
                dy[k] *= I * self.deriv.xi_y[j];
            }
        }
        Ok((self.t().inverse(&dx)?, self.t().inverse(&dy)?))
    }

    /// Mode array of `∂a/∂x + ∂b/∂y` for physical `a`, `b`.
    fn divergence_modes(&self, a: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let ma = self.t().forward(a)?;
        let mb = self.t().forward(b)?;
        let mut out = vec![Complex64::ZERO; ma.len()];
        for i in 0..nx {
            for j in 0..ny {
                let k = i * ny + j;
                out[k] = I * (self.deriv.xi_x[i] * ma[k] + self.deriv.xi_y[j] * mb[k]);
            }
        }
        Ok(out)
    }

    fn remainder(&self, u: &ComplexField, adjoint: bool) -> Result<ComplexField> {
        check_grid(&self.grid, u)?;
        let mut modes = self.t().forward(u.data())?;
        self.project(&mut modes);
        let up = self.t().inverse(&modes)?;
        let (gx, gy) = self.gradient(&modes)?;
        let n = up.len();
        let mut fx = Vec::with_capacity(n);
        let mut fy = Vec::with_capacity(n);
        let mut local = Vec::with_capacity(n);
        for k in 0..n {
            let kap = self.dkappa[k];
            if adjoint {
                // ∇·(δκ∇u) + ∇·(δv u) − δσ u
                fx.push(kap * gx[k] + self.dvx[k] * up[k]);
                fy.push(kap * gy[k] + self.dvy[k] * up[k]);
                local.push(-self.dsigma[k] * up[k]);
            } else {
                // ∇·(δκ∇u) − δv·∇u − δσ u
                fx.push(kap * gx[k]);
                fy.push(kap * gy[k]);
                local.push(-(self.dvx[k] * gx[k] + self.dvy[k] * gy[k]) - self.dsigma[k] * up[k]);
            }
        }
        let mut out = self.divergence_modes(&fx, &fy)?;
        let lm = self.t().forward(&local)?;
        out.iter_mut().zip(&lm).for_each(|(o, l)| *o += l);
        self.project(&mut out);
        ComplexField::from_vec(self.grid, self.t().inverse(&out)?)
    }
}

impl SplitProblem for CdrProblem {
    fn family(&self) -> Family {
        Family::Cdr
    }

    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn reference(&self) -> &ReferenceOperator {
        &self.reference
    }

    /// `L0 u − V u`; the discrete operator is defined through its splitting.
    fn apply_a(&self, u: &ComplexField) -> Result<ComplexField> {
        self.apply_lref(u)?.sub(&self.apply_v(u)?)
    }

    fn apply_v(&self, u: &ComplexField) -> Result<ComplexField> {
        self.remainder(u, false)
    }

    fn apply_a_adjoint(&self, u: &ComplexField) -> Result<ComplexField> {
        self.reference.apply_adjoint(u)?.sub(&self.apply_v_adjoint(u)?)
    }

    fn apply_v_adjoint(&self, u: &ComplexField) -> Result<ComplexField> {
        self.remainder(u, true)
    }
}
