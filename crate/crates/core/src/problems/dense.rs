//! Dense assembly of matrix-free operators, for verification at small sizes.

use faer::{c64, Mat};

use super::SplitProblem;
use crate::error::{mismatch, Error, Result};
use crate::fields::ComplexField;
use crate::spectral::GridSpec;

/// Largest number of unknowns accepted for dense assembly (a 64×64 grid).
pub const DENSE_CAP: usize = 4096;

pub fn field_to_column(u: &ComplexField) -> Mat<c64> {
    Mat::from_fn(u.len(), 1, |i, _| u.data()[i])
}

pub fn column_to_field(grid: &GridSpec, m: &Mat<c64>, col: usize) -> Result<ComplexField> {
    if m.nrows() != grid.len() {
        return Err(mismatch(grid.len(), m.nrows()));
    }
    ComplexField::from_vec(*grid, (0..m.nrows()).map(|i| m[(i, col)]).collect())
}

pub fn mat_vec(m: &Mat<c64>, x: &ComplexField) -> Result<ComplexField> {
    if m.ncols() != x.len() || m.nrows() != x.len() {
        return Err(mismatch(format!("{}x{} matrix", x.len(), x.len()), format!("{}x{}", m.nrows(), m.ncols())));
    }
    let y = m * field_to_column(x);
    column_to_field(x.grid(), &y, 0)
}

/// Column `j` is `apply(e_j)`.
pub fn assemble_operator(
    grid: &GridSpec,
    apply: impl Fn(&ComplexField) -> Result<ComplexField>,
) -> Result<Mat<c64>> {
    let n = grid.len();
    if n > DENSE_CAP {
        return Err(Error::TooLarge(n));
    }
    let mut m = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        let col = apply(&ComplexField::unit(grid, j))?;
        for (i, v) in col.data().iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

pub fn assemble_dense(problem: &dyn SplitProblem) -> Result<Mat<c64>> {
    assemble_operator(problem.grid(), |u| problem.apply_a(u))
}

pub fn assemble_dense_g(problem: &dyn SplitProblem) -> Result<Mat<c64>> {
    assemble_operator(problem.grid(), |u| problem.apply_g(u))
}

/// `I − G V`.
pub fn assemble_dense_born(problem: &dyn SplitProblem) -> Result<Mat<c64>> {
    assemble_operator(problem.grid(), |u| problem.apply_born(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{RealField, RngState};
    use crate::problems::{HelmholtzOptions, HelmholtzProblem, NewtonJacobianProblem};

    #[test]
    fn identity_operator_assembles_to_identity() {
        let g = GridSpec::periodic(4, 4, 1.0, 1.0).unwrap();
        let m = assemble_operator(&g, |u| Ok(u.clone())).unwrap();
        assert_eq!(m, Mat::<c64>::identity(16, 16));
    }

    #[test]
    fn newton_n3_is_textbook_five_point_matrix() {
        let g = GridSpec::unit_dirichlet(3).unwrap();
        let p = NewtonJacobianProblem::new(RealField::zeros(&g), 0.0).unwrap();
        let m = assemble_dense(&p).unwrap();
        let inv_h2 = 16.0;
        for r in 0..9usize {
            for c in 0..9usize {
                let (ri, rj, ci, cj) = (r / 3, r % 3, c / 3, c % 3);
                let dist = ri.abs_diff(ci) + rj.abs_diff(cj);
                let expect = match dist {
                    0 => 4.0 * inv_h2,
                    1 => -inv_h2,
                    _ => 0.0,
                };
                assert_eq!(m[(r, c)], c64::new(expect, 0.0), "entry ({r}, {c})");
            }
        }
    }

    #[test]
    fn dense_helmholtz_matches_matvec() {
        let g = GridSpec::periodic(8, 8, 1.0, 1.0).unwrap();
        let k = RealField::from_fn(&g, |x, y| 5.0 + 2.0 * x * y);
        let p = HelmholtzProblem::from_wavenumber(&k, None, HelmholtzOptions::default()).unwrap();
        let m = assemble_dense(&p).unwrap();
        let x = ComplexField::random_normal(&g, &mut RngState::new(8));
        let direct = p.apply_a(&x).unwrap();
        assert!(mat_vec(&m, &x).unwrap().sub(&direct).unwrap().norm() <= 1e-12 * direct.norm());
    }

    #[test]
    fn size_cap_is_enforced() {
        let g = GridSpec::periodic(65, 64, 1.0, 1.0).unwrap();
        assert!(matches!(assemble_operator(&g, |u| Ok(u.clone())), Err(Error::TooLarge(4160))));
    }
}
