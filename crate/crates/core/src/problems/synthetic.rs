//! Seeded generators for families of benchmark instances.
//!
//! Each family maps an [`RngState`] to a [`ProblemInstance`]; a sweep derives one state
//! per sample with [`RngState::split`], so paired methods always see the same instance.

use std::f64::consts::PI;

use super::{
    AnyProblem, Family, CdrCoefficients, CdrOptions, CdrProblem, HelmholtzOptions, HelmholtzProblem, NewtonJacobianProblem,
    ProblemInstance,
};
use crate::error::{Error, Result};
use crate::fields::{gaussian_bump, layered_velocity, sample_grf, sine_noise, sponge_profile, LayeredMedium, RngState};
use crate::spectral::GridSpec;

/// Layered Helmholtz media on the unit square with a sponge and a point-like source.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzFamily {
    pub n: usize,
    pub medium: LayeredMedium,
    /// Points per wavelength in the slowest layer.
    pub ppw: f64,
    pub sponge_points: usize,
    pub sponge_strength: f64,
    /// Source width in grid cells.
    pub source_cells: f64,
    pub eta: Option<f64>,
}

impl Default for HelmholtzFamily {
    fn default() -> Self {
        Self {
            n: 64,
            medium: LayeredMedium::default(),
            ppw: 12.0,
            sponge_points: 8,
            sponge_strength: 1.0,
            source_cells: 1.5,
            eta: None,
        }
    }
}

impl HelmholtzFamily {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::periodic(self.n, self.n, 1.0, 1.0)
    }

    /// Angular frequency giving `ppw` points per wavelength at `c_min`.
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.medium.c_min * self.n as f64 / self.ppw
    }

    pub fn sample(&self, rng: &mut RngState) -> Result<ProblemInstance> {
        if !(self.ppw > 2.0) {
            return Err(Error::InvalidParameter(format!("ppw must exceed 2, got {}", self.ppw)));
        }
        let grid = self.grid()?;
        let c = layered_velocity(&grid, &self.medium, rng)?;
        let damping = sponge_profile(&grid, self.sponge_points, self.sponge_strength)?;
        let opts = HelmholtzOptions { k0_sq: None, eta: self.eta };
        let problem = HelmholtzProblem::from_velocity(&c, self.omega(), Some(&damping), opts)?;
        let margin = (self.sponge_points as f64 + 2.0) / self.n as f64;
        let center = (rng.uniform(margin, 1.0 - margin), rng.uniform(margin, 1.0 - margin));
        let source = gaussian_bump(&grid, center, self.source_cells * grid.hx(), 1.0)?;
        Ok(ProblemInstance { problem: AnyProblem::Helmholtz(problem), source: source.to_complex() })
    }
}

/// Periodic convection-diffusion-reaction with log-normal diffusivity, an
/// incompressible stream-function velocity and a non-negative reaction rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CdrFamily {
    pub n: usize,
    pub correlation_length: f64,
    pub kappa_mean: f64,
    /// Standard deviation of `log κ`.
    pub log_kappa_std: f64,
    /// Peak speed of the velocity field.
    pub velocity: f64,
    pub sigma_mean: f64,
    pub sigma_std: f64,
    pub dealias: bool,
}

impl Default for CdrFamily {
    fn default() -> Self {
        Self {
            n: 64,
            correlation_length: 0.15,
            kappa_mean: 1.0,
            log_kappa_std: 0.5,
            velocity: 10.0,
            sigma_mean: 5.0,
            sigma_std: 2.0,
            dealias: false,
        }
    }
}

impl CdrFamily {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::periodic(self.n, self.n, 1.0, 1.0)
    }

    pub fn sample(&self, rng: &mut RngState) -> Result<ProblemInstance> {
        let grid = self.grid()?;
        let ell = self.correlation_length;
        let kappa = sample_grf(&grid, ell, 0.0, self.log_kappa_std, rng)?.map(|g| self.kappa_mean * g.exp());
        let psi = sample_grf(&grid, ell, 0.0, 1.0, rng)?;
        let (vx, vy) = crate::fields::stream_velocity(&psi)?;
        let peak = vx.max_abs().max(vy.max_abs());
        let scale = if peak > 0.0 { self.velocity / peak } else { 0.0 };
        let (vx, vy) = (vx.map(|v| v * scale), vy.map(|v| v * scale));
        let sigma = sample_grf(&grid, ell, self.sigma_mean, self.sigma_std, rng)?.map(|s| s.max(0.0));
        let problem = CdrProblem::new(
            CdrCoefficients { kappa, vx, vy, sigma },
            CdrOptions { dealias: self.dealias, ..CdrOptions::default() },
        )?;
        let source = sample_grf(&grid, ell, 0.0, 1.0, rng)?;
        Ok(ProblemInstance { problem: AnyProblem::Cdr(problem), source: source.to_complex() })
    }
}

/// Jacobians of the nonlinear Dirichlet benchmark at states `a·sin(πx)sin(πy) + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonFamily {
    pub n: usize,
    /// Range of the smooth amplitude `a`.
    pub amplitude: (f64, f64),
    pub noise_std: f64,
    pub alpha: f64,
}

impl Default for NewtonFamily {
    fn default() -> Self {
        Self { n: 63, amplitude: (-100.0, 20.0), noise_std: 1.0, alpha: 0.0 }
    }
}

impl NewtonFamily {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::unit_dirichlet(self.n)
    }

    pub fn sample(&self, rng: &mut RngState) -> Result<ProblemInstance> {
        let grid = self.grid()?;
        let a = rng.uniform(self.amplitude.0, self.amplitude.1);
        let noise = sine_noise(&grid, 4, self.noise_std, 4.0, rng)?;
        let state = noise.zip_with(
            &crate::fields::RealField::from_fn(&grid, |x, y| a * (PI * x).sin() * (PI * y).sin()),
            |n, s| n + s,
        )?;
        let problem = NewtonJacobianProblem::new(state, self.alpha)?;
        let source = sine_noise(&grid, 8, 1.0, 1.0, rng)?.to_complex();
        Ok(ProblemInstance { problem: AnyProblem::Newton(problem), source })
    }
}

/// Any of the three generators, selected by problem family.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceFamily {
    Helmholtz(HelmholtzFamily),
    Cdr(CdrFamily),
    Newton(NewtonFamily),
}

impl InstanceFamily {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Helmholtz => Self::Helmholtz(HelmholtzFamily::default()),
            Family::Cdr => Self::Cdr(CdrFamily::default()),
            Family::Newton => Self::Newton(NewtonFamily::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Helmholtz(_) => Family::Helmholtz,
            Self::Cdr(_) => Family::Cdr,
            Self::Newton(_) => Family::Newton,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        match self {
            Self::Helmholtz(f) => f.grid(),
            Self::Cdr(f) => f.grid(),
            Self::Newton(f) => f.grid(),
        }
    }

    pub fn sample(&self, rng: &mut RngState) -> Result<ProblemInstance> {
        match self {
            Self::Helmholtz(f) => f.sample(rng),
            Self::Cdr(f) => f.sample(rng),
            Self::Newton(f) => f.sample(rng),
        }
    }

    /// Instance `index` of the family under `root`; independent of evaluation order.
    pub fn instance(&self, root: &RngState, index: u64) -> Result<ProblemInstance> {
        self.sample(&mut root.split(index))
    }
}
