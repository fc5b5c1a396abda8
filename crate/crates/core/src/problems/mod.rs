//! Discrete systems `A u = f` with a fast splitting `A = L_ref − V`, `G = L_ref⁻¹`.

mod cdr;
mod dense;
mod helmholtz;
mod jacobian;
mod manifest;
mod synthetic;

pub use cdr::{CdrCoefficients, CdrOptions, CdrProblem};
pub use dense::{
    assemble_dense, assemble_dense_born, assemble_dense_g, assemble_operator, column_to_field, field_to_column,
    mat_vec, DENSE_CAP,
};
pub use helmholtz::{HelmholtzOptions, HelmholtzProblem};
pub use jacobian::{five_point_laplacian, NewtonJacobianProblem};
pub use manifest::{load_manifest, save_manifest, AnyProblem, ProblemInstance};
pub use synthetic::{CdrFamily, HelmholtzFamily, InstanceFamily, NewtonFamily};

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::ComplexField;
use crate::spectral::{GridSpec, SpectralSymbol, Transform2d, TransformKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Helmholtz,
    Cdr,
    Newton,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Helmholtz, Family::Cdr, Family::Newton];

    pub fn name(self) -> &'static str {
        match self {
            Self::Helmholtz => "helmholtz",
            Self::Cdr => "cdr",
            Self::Newton => "newton",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown problem family {s:?}")))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Constant-coefficient reference operator `L_ref = T⁻¹ diag(λ) T` and its inverse.
///
/// Only the FFT and DST-I are accepted: both are unitary up to a scale, so adjoints are
/// obtained by conjugating the symbol.
#[derive(Debug, Clone)]
pub struct ReferenceOperator {
    transform: Transform2d,
    symbol: SpectralSymbol,
    inverse: Vec<Complex64>,
}

impl ReferenceOperator {
    pub fn new(transform: Transform2d, symbol: SpectralSymbol) -> Result<Self> {
        if transform.kind() == TransformKind::Dct {
            return Err(Error::IncompatibleTransform {
                kind: "dct reference operator".into(),
                bc: transform.grid().bc.name().into(),
            });
        }
        let g = transform.grid();
        if symbol.kind != transform.kind() || symbol.nx != g.nx || symbol.ny != g.ny {
            return Err(crate::error::mismatch(
                format!("{} symbol {}x{}", transform.kind(), g.nx, g.ny),
                format!("{} symbol {}x{}", symbol.kind, symbol.nx, symbol.ny),
            ));
        }
        symbol.check_invertible()?;
        let inverse = symbol.values.iter().map(|v| v.inv()).collect();
        Ok(Self { transform, symbol, inverse })
    }

    pub fn transform(&self) -> &Transform2d {
        &self.transform
    }

    pub fn symbol(&self) -> &SpectralSymbol {
        &self.symbol
    }

    pub fn apply(&self, u: &ComplexField) -> Result<ComplexField> {
        self.transform.apply_diagonal(u, &self.symbol.values)
    }

    pub fn apply_inverse(&self, q: &ComplexField) -> Result<ComplexField> {
        self.transform.apply_diagonal(q, &self.inverse)
    }

    pub fn apply_adjoint(&self, u: &ComplexField) -> Result<ComplexField> {
        let conj: Vec<_> = self.symbol.values.iter().map(|v| v.conj()).collect();
        self.transform.apply_diagonal(u, &conj)
    }

    pub fn apply_inverse_adjoint(&self, q: &ComplexField) -> Result<ComplexField> {
        let conj: Vec<_> = self.inverse.iter().map(|v| v.conj()).collect();
        self.transform.apply_diagonal(q, &conj)
    }
}

/// A split linear system. `apply_a`, `apply_v` and the reference operator are
/// implemented independently, so `A = L_ref − V` is a checkable property rather than a
/// definition.
pub trait SplitProblem: fmt::Debug + Send + Sync {
    fn family(&self) -> Family;

    fn grid(&self) -> &GridSpec;

    fn reference(&self) -> &ReferenceOperator;

    fn apply_a(&self, u: &ComplexField) -> Result<ComplexField>;

    fn apply_v(&self, u: &ComplexField) -> Result<ComplexField>;

    fn apply_a_adjoint(&self, u: &ComplexField) -> Result<ComplexField>;

    fn apply_v_adjoint(&self, u: &ComplexField) -> Result<ComplexField>;

    fn transform(&self) -> &Transform2d {
        self.reference().transform()
    }

    fn apply_lref(&self, u: &ComplexField) -> Result<ComplexField> {
        self.reference().apply(u)
    }

    fn apply_g(&self, q: &ComplexField) -> Result<ComplexField> {
        self.reference().apply_inverse(q)
    }

    fn apply_g_adjoint(&self, q: &ComplexField) -> Result<ComplexField> {
        self.reference().apply_inverse_adjoint(q)
    }

    /// `(I − G V) x`.
    fn apply_born(&self, x: &ComplexField) -> Result<ComplexField> {
        x.sub(&self.apply_g(&self.apply_v(x)?)?)
    }

    /// `(I − G V)* x = x − V* G* x`.
    fn apply_born_adjoint(&self, x: &ComplexField) -> Result<ComplexField> {
        x.sub(&self.apply_v_adjoint(&self.apply_g_adjoint(x)?)?)
    }
}

pub(crate) fn check_grid(expected: &GridSpec, u: &ComplexField) -> Result<()> {
    if !expected.same_shape(u.grid()) || expected.bc != u.grid().bc {
        return Err(crate::error::mismatch(expected.describe(), u.grid().describe()));
    }
    Ok(())
}

/// Pointwise product with a precomputed coefficient vector.
pub(crate) fn pointwise(u: &ComplexField, coeff: &[Complex64]) -> ComplexField {
    let mut out = u.clone();
    out.data_mut().iter_mut().zip(coeff).for_each(|(v, c)| *v *= c);
    out
}
