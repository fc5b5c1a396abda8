//! Spectral preconditioned iterations for Helmholtz, convection-diffusion-reaction and
//! Newton-Jacobian systems.
//!
//! Every discrete system `A u = f` is split as `A = L_ref − V`, where the reference
//! operator `L_ref` is diagonalized by a fast transform and `G = L_ref⁻¹` is applied in
//! `O(N log N)`. On top of this the crate provides:
//!
//! * three iteration formats ([`iterate::Format`]): direct residual correction, the
//!   convergent Born series (shifted-Laplacian Richardson) and the preconditioned Born
//!   iteration with a pluggable [`correction::CorrectionMap`];
//! * the three residual-metric training objectives ([`train::LossKind`]) and a trainer
//!   for a diagonal Fourier multiplier;
//! * an outer Newton loop for `−Δu − u² = f` with preconditioned inner solves.
//!
//! ```
//! use bornprec::prelude::*;
//! use num_complex::Complex64;
//!
//! let grid = GridSpec::periodic(16, 16, 1.0, 1.0).unwrap();
//! let k = RealField::from_fn(&grid, |x, _| 20.0 + 4.0 * (2.0 * std::f64::consts::PI * x).sin());
//! // absorbing strip near the cell edge
//! let d = RealField::from_fn(&grid, |x, y| 2.0 * (1.0 - (4.0 * x * (1.0 - x) * 4.0 * y * (1.0 - y))).powi(4));
//! let problem = HelmholtzProblem::from_wavenumber(&k, Some(&d), HelmholtzOptions::default()).unwrap();
//! let f = ComplexField::from_fn(&grid, |x, y| Complex64::new((-(x - 0.5).powi(2) - (y - 0.5).powi(2)).exp(), 0.0));
//! let config = IterationConfig::new(Format::Npbs, 1e-8, 2000).unwrap();
//! let map = CorrectionMap::OptimalScalar(ScalarMetric::Euclidean);
//! let (_u, trace) = run(&problem, &map, &f, &config, None).unwrap();
//! assert_eq!(trace.terminated, Termination::Converged);
//! ```

pub mod config;
pub mod correction;
pub mod error;
pub mod fields;
pub mod iterate;
pub mod newton;
pub mod problems;
pub mod spectral;
pub mod train;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::correction::{apply_correction, optimal_scalar, CorrectionMap, DenseExact, FourierDiag, ScalarMetric};
    pub use crate::error::{Error, Result};
    pub use crate::fields::{ComplexField, RealField, RngState};
    pub use crate::iterate::{
        norm_reta, residual, run, spectral_diagnostics, Format, IterationConfig, IterationTrace, Termination,
    };
    pub use crate::problems::{
        CdrCoefficients, CdrOptions, CdrProblem, Family, HelmholtzOptions, HelmholtzProblem, NewtonJacobianProblem,
        SplitProblem,
    };
    pub use crate::spectral::{BoundaryCondition, GridSpec, SpectralSymbol, Transform2d, TransformKind};
    pub use crate::train::{eval_loss, eval_loss_riesz_form, loss_gradient, train_map, LossKind, TrainConfig};
}
