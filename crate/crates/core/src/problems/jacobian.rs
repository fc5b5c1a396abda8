use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::{check_grid, pointwise, Family, ReferenceOperator, SplitProblem};
use crate::error::{Error, Result};
use crate::fields::{ComplexField, RealField};
use crate::spectral::{laplacian_symbol, BoundaryCondition, GridSpec, SpectralSymbol, Transform2d, TransformKind};

/// Five-point `−Δ` on interior unknowns with a zero Dirichlet halo.
pub fn five_point_laplacian<T>(grid: &GridSpec, u: &[T]) -> Vec<T>
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let (nx, ny) = (grid.nx, grid.ny);
    let (cx, cy) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    let zero = T::default();
    let mut out = Vec::with_capacity(u.len());
    for i in 0..nx {
        for j in 0..ny {
            let c = u[i * ny + j];
            let w = if i > 0 { u[(i - 1) * ny + j] } else { zero };
            let e = if i + 1 < nx { u[(i + 1) * ny + j] } else { zero };
            let s = if j > 0 { u[i * ny + j - 1] } else { zero };
            let n = if j + 1 < ny { u[i * ny + j + 1] } else { zero };
            out.push((c + c - w - e) * cx + (c + c - s - n) * cy);
        }
    }
    out
}

/// Jacobian `J = L_D − 2 diag(u)` of `−Δu − u²` at a Newton iterate, split around
/// `J0 = L_D − 2ū + α`, which the DST-I diagonalizes. The remainder is the diagonal
/// `V = 2(u − ū) + α`.
#[derive(Debug, Clone)]
pub struct NewtonJacobianProblem {
    grid: GridSpec,
    u: RealField,
    ubar: f64,
    alpha: f64,
    v: Vec<Complex64>,
    reference: ReferenceOperator,
}

impl NewtonJacobianProblem {
    pub fn new(u_current: RealField, alpha: f64) -> Result<Self> {
        let grid = *u_current.grid();
        if grid.bc != BoundaryCondition::DirichletInterior {
            return Err(Error::IncompatibleTransform { kind: "newton jacobian (dst1)".into(), bc: grid.bc.name().into() });
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!("alpha must be a non-negative number, got {alpha}")));
        }
        let ubar = u_current.mean();
        let shift = alpha - 2.0 * ubar;
        let symbol = laplacian_symbol(&grid).map(|l| l + shift);
        let reference = ReferenceOperator::new(Transform2d::new(&grid, TransformKind::Dst1)?, symbol)?;
        let v = u_current
            .data()
            .iter()
            .map(|&u| Complex64::new(2.0 * (u - ubar) + alpha, 0.0))
            .collect();
        Ok(Self { grid, u: u_current, ubar, alpha, v, reference })
    }

    pub fn u_current(&self) -> &RealField {
        &self.u
    }

    pub fn ubar(&self) -> f64 {
        self.ubar
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn symbol(&self) -> &SpectralSymbol {
        self.reference.symbol()
    }
}

impl SplitProblem for NewtonJacobianProblem {
    fn family(&self) -> Family {
        Family::Newton
    }

    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn reference(&self) -> &ReferenceOperator {
        &self.reference
    }

    fn apply_a(&self, x: &ComplexField) -> Result<ComplexField> {
        check_grid(&self.grid, x)?;
        let mut out = five_point_laplacian(&self.grid, x.data());
        out.iter_mut()
            .zip(x.data().iter().zip(self.u.data()))
            .for_each(|(o, (xv, &u))| *o -= 2.0 * u * xv);
        ComplexField::from_vec(self.grid, out)
    }

    fn apply_v(&self, x: &ComplexField) -> Result<ComplexField> {
        check_grid(&self.grid, x)?;
        Ok(pointwise(x, &self.v))
    }

    // J and V are real symmetric.
    fn apply_a_adjoint(&self, x: &ComplexField) -> Result<ComplexField> {
        self.apply_a(x)
    }

    fn apply_v_adjoint(&self, x: &ComplexField) -> Result<ComplexField> {
        self.apply_v(x)
    }
}
