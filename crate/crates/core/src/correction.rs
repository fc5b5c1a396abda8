//! Correction maps `M` consumed by the iterations.

use std::fmt;
use std::path::Path;

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat};
use num_complex::Complex64;

use crate::error::{mismatch, Error, Result};
use crate::fields::{read_field_file, write_field_file, ComplexField, FieldData};
use crate::problems::{assemble_dense, assemble_dense_born, mat_vec, SplitProblem};
use crate::spectral::{GridSpec, Transform2d, TransformKind};

/// Metric in which the per-step optimal scalar minimizes the updated residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarMetric {
    Euclidean,
    /// `‖x‖ = ‖G x‖₂`.
    REta,
}

impl ScalarMetric {
    pub fn name(self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::REta => "reta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Self::Euclidean),
            "reta" | "r_eta" => Ok(Self::REta),
            _ => Err(Error::InvalidParameter(format!("unknown scalar metric {s:?}"))),
        }
    }
}

/// Learnable diagonal multiplier in the transform domain: `M x = T⁻¹(m ⊙ T x)`.
///
/// Parameters are flattened as `θ = [Re m, Im m]`.
#[derive(Clone)]
pub struct FourierDiag {
    transform: Transform2d,
    m: Vec<Complex64>,
}

impl fmt::Debug for FourierDiag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierDiag")
            .field("kind", &self.transform.kind())
            .field("grid", self.transform.grid())
            .field("modes", &self.m.len())
            .finish()
    }
}

impl PartialEq for FourierDiag {
    fn eq(&self, other: &Self) -> bool {
        self.transform.kind() == other.transform.kind()
            && self.transform.grid() == other.transform.grid()
            && self.m == other.m
    }
}

impl FourierDiag {
    /// `m ≡ 1`.
    pub fn identity(transform: Transform2d) -> Self {
        let n = transform.grid().len();
        Self { transform, m: vec![Complex64::ONE; n] }
    }

    pub fn from_modes(transform: Transform2d, m: Vec<Complex64>) -> Result<Self> {
        if m.len() != transform.grid().len() {
            return Err(mismatch(transform.grid().len(), m.len()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fourier multiplier".into()));
        }
        Ok(Self { transform, m })
    }

    pub fn transform(&self) -> &Transform2d {
        &self.transform
    }

    pub fn kind(&self) -> TransformKind {
        self.transform.kind()
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.m
    }

    pub fn n_params(&self) -> usize {
        2 * self.m.len()
    }

    pub fn theta(&self) -> Vec<f64> {
        self.m.iter().map(|v| v.re).chain(self.m.iter().map(|v| v.im)).collect()
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        let n = self.m.len();
        if theta.len() != 2 * n {
            return Err(mismatch(2 * n, theta.len()));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fourier multiplier parameters".into()));
        }
        for (k, m) in self.m.iter_mut().enumerate() {
            *m = Complex64::new(theta[k], theta[n + k]);
        }
        Ok(())
    }

    pub fn apply(&self, x: &ComplexField) -> Result<ComplexField> {
        self.transform.apply_diagonal(x, &self.m)
    }

    /// The multiplier laid out on the grid, for the binary field format.
    pub fn to_field(&self) -> Result<ComplexField> {
        ComplexField::from_vec(*self.transform.grid(), self.m.clone())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_field_file(path, &FieldData::Complex(self.to_field()?))
    }

    pub fn load(path: impl AsRef<Path>, grid: &GridSpec) -> Result<Self> {
        let m = read_field_file(path, grid)?.into_complex().into_vec();
        Self::from_modes(Transform2d::for_grid(grid)?, m)
    }
}

/// Dense matrix acting as a correction map; used as an exact-inverse oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseExact {
    grid: GridSpec,
    matrix: Mat<c64>,
}

impl DenseExact {
    pub fn new(grid: GridSpec, matrix: Mat<c64>) -> Result<Self> {
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return Err(mismatch(
                format!("{0}x{0} matrix", grid.len()),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        Ok(Self { grid, matrix })
    }

    /// `A⁻¹`, the exact map for the direct format.
    pub fn inverse_of_a(problem: &dyn SplitProblem) -> Result<Self> {
        Self::new(*problem.grid(), invert(&assemble_dense(problem)?)?)
    }

    /// `(I − G V)⁻¹`, the exact map for the Born format.
    pub fn inverse_of_born(problem: &dyn SplitProblem) -> Result<Self> {
        Self::new(*problem.grid(), invert(&assemble_dense_born(problem)?)?)
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexField) -> Result<ComplexField> {
        if !x.grid().same_shape(&self.grid) {
            return Err(mismatch(self.grid.describe(), x.grid().describe()));
        }
        mat_vec(&self.matrix, x)
    }
}

fn invert(m: &Mat<c64>) -> Result<Mat<c64>> {
    let inv = m.partial_piv_lu().inverse();
    if inv.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::LinearAlgebra("matrix is numerically singular".into()));
    }
    Ok(inv)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorrectionMap {
    Scalar(Complex64),
    /// Scalar chosen each step to minimize the updated residual.
    OptimalScalar(ScalarMetric),
    FourierDiag(FourierDiag),
    DenseExact(DenseExact),
}

impl CorrectionMap {
    pub fn identity() -> Self {
        Self::Scalar(Complex64::ONE)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Scalar(g) => format!("scalar({g})"),
            Self::OptimalScalar(m) => format!("optimal-scalar({})", m.name()),
            Self::FourierDiag(_) => "fourier-diag".into(),
            Self::DenseExact(_) => "dense-exact".into(),
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Self::Scalar(_) | Self::OptimalScalar(_))
    }
}

/// Data needed to choose the optimal scalar: the problem and the current true residual
/// `r = f − A u`.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub problem: &'a dyn SplitProblem,
    pub residual: &'a ComplexField,
}

/// Least-squares scalar fit `γ = ⟨b, r⟩ / ‖b‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarFit {
    pub gamma: Complex64,
    /// `‖b‖ = 0`; `γ` is then reported as zero.
    pub degenerate: bool,
}

/// `argmin_γ ‖r − γ b‖₂` for `r = residual_precond` and `b = operator_times_c`.
pub fn optimal_scalar(residual_precond: &ComplexField, operator_times_c: &ComplexField) -> Result<ScalarFit> {
    residual_precond.check_same(operator_times_c)?;
    let den = operator_times_c.norm_sqr();
    if den == 0.0 || !den.is_finite() {
        return Ok(ScalarFit { gamma: Complex64::ZERO, degenerate: true });
    }
    Ok(ScalarFit { gamma: operator_times_c.dot(residual_precond) / den, degenerate: false })
}

/// Scalar for the update `u + γ c` minimizing `‖r − γ A c‖` in `metric`.
pub fn optimal_step_scalar(metric: ScalarMetric, c: &ComplexField, ctx: &StepContext<'_>) -> Result<ScalarFit> {
    let ac = ctx.problem.apply_a(c)?;
    match metric {
        ScalarMetric::Euclidean => optimal_scalar(ctx.residual, &ac),
        ScalarMetric::REta => optimal_scalar(&ctx.problem.apply_g(ctx.residual)?, &ctx.problem.apply_g(&ac)?),
    }
}

/// Applies `M` to `x`. `OptimalScalar` needs `ctx`; the other variants ignore it.
pub fn apply_correction(map: &CorrectionMap, x: &ComplexField, ctx: Option<&StepContext<'_>>) -> Result<ComplexField> {
    match map {
        CorrectionMap::Scalar(g) => Ok(x.scale(*g)),
        CorrectionMap::OptimalScalar(metric) => {
            let ctx = ctx.ok_or_else(|| Error::InvalidParameter("optimal scalar needs a step context".into()))?;
            Ok(x.scale(optimal_step_scalar(*metric, x, ctx)?.gamma))
        }
        CorrectionMap::FourierDiag(d) => d.apply(x),
        CorrectionMap::DenseExact(d) => d.apply(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{RealField, RngState};
    use crate::problems::{HelmholtzOptions, HelmholtzProblem};

    fn helmholtz(n: usize) -> HelmholtzProblem {
        let g = GridSpec::periodic(n, n, 1.0, 1.0).unwrap();
        let k = RealField::from_fn(&g, |x, y| 8.0 + 3.0 * (6.0 * x).sin() * y);
        HelmholtzProblem::from_wavenumber(&k, None, HelmholtzOptions::default()).unwrap()
    }

    #[test]
    fn identity_maps() {
        let p = helmholtz(8);
        let x = ComplexField::random_normal(p.grid(), &mut RngState::new(1));
        let one = apply_correction(&CorrectionMap::identity(), &x, None).unwrap();
        assert_eq!(one, x);
        let diag = FourierDiag::identity(p.transform().clone());
        let y = apply_correction(&CorrectionMap::FourierDiag(diag), &x, None).unwrap();
        assert!(y.sub(&x).unwrap().norm() <= 1e-14 * x.norm());
    }

    #[test]
    fn optimal_scalar_edge_cases() {
        let g = GridSpec::periodic(4, 4, 1.0, 1.0).unwrap();
        let mut rng = RngState::new(2);
        let b = ComplexField::random_normal(&g, &mut rng);
        let fit = optimal_scalar(&b, &b).unwrap();
        assert!((fit.gamma - Complex64::ONE).norm() < 1e-15 && !fit.degenerate);
        // r ⟂ b
        let mut r = ComplexField::random_normal(&g, &mut rng);
        let proj = b.dot(&r) / b.norm_sqr();
        r.axpy(-proj, &b).unwrap();
        assert!(optimal_scalar(&r, &b).unwrap().gamma.norm() < 1e-14);
        let zero = optimal_scalar(&r, &ComplexField::zeros(&g)).unwrap();
        assert_eq!(zero, ScalarFit { gamma: Complex64::ZERO, degenerate: true });
    }

    #[test]
    fn theta_round_trip_and_save() {
        let p = helmholtz(8);
        let mut d = FourierDiag::identity(p.transform().clone());
        let theta: Vec<f64> = (0..d.n_params()).map(|k| k as f64 * 0.5 - 3.0).collect();
        d.set_theta(&theta).unwrap();
        assert_eq!(d.theta(), theta);
        assert_eq!(d.modes()[1], Complex64::new(-2.5, 64.0 * 0.5 + 0.5 - 3.0));
        assert!(d.set_theta(&theta[1..]).is_err());
        let dir = std::env::temp_dir().join(format!("bp-fd-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.bpfd");
        d.save(&path).unwrap();
        assert_eq!(FourierDiag::load(&path, p.grid()).unwrap(), d);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn dense_exact_inverse_solves() {
        let p = helmholtz(8);
        let f = ComplexField::random_normal(p.grid(), &mut RngState::new(3));
        let exact = DenseExact::inverse_of_born(&p).unwrap();
        let u = exact.apply(&p.apply_g(&f).unwrap()).unwrap();
        let r = f.sub(&p.apply_a(&u).unwrap()).unwrap();
        assert!(r.norm() <= 1e-10 * f.norm());
    }
}
