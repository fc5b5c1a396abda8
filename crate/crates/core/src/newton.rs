//! Newton's method for `−Δu − u² = f` with `f = −s sin(πx) sin(πy)` on the unit square,
//! five-point differences on interior points and zero Dirichlet data.
//!
//! Each outer step solves `J δ = −F(u)` with `J = L_D − 2 diag(u)`, either by a sparse
//! direct factorization (the oracle) or by one of the preconditioned iterations on a
//! [`NewtonJacobianProblem`].

use std::f64::consts::PI;
use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::correction::CorrectionMap;
use crate::error::{Error, Result};
use crate::fields::RealField;
use crate::iterate::{run, IterationConfig, Termination};
use crate::problems::{five_point_laplacian, NewtonJacobianProblem};
use crate::spectral::{BoundaryCondition, GridSpec};

pub const DEFAULT_SOURCE_SCALE: f64 = 1600.0;
pub const DEFAULT_N: usize = 63;

/// How the linearized system is solved at each outer step.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerSolver {
    /// Sparse LU of the assembled Jacobian.
    Direct,
    Iterative { config: IterationConfig, map: CorrectionMap },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub s: f64,
    pub outer_tol: f64,
    pub max_outer: usize,
    /// Shift `α` of the reference Jacobian.
    pub alpha: f64,
    pub inner: InnerSolver,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            s: DEFAULT_SOURCE_SCALE,
            outer_tol: 1e-8,
            max_outer: 25,
            alpha: 0.0,
            inner: InnerSolver::Direct,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s == 0.0 || !self.s.is_finite() {
            return Err(Error::InvalidParameter(format!("source scale must be non-zero, got {}", self.s)));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("outer_tol must be positive, got {}", self.outer_tol)));
        }
        Ok(())
    }
}

fn check_grid(grid: &GridSpec) -> Result<()> {
    if grid.bc != BoundaryCondition::DirichletInterior {
        return Err(Error::IncompatibleTransform { kind: "newton problem".into(), bc: grid.bc.name().into() });
    }
    Ok(())
}

/// `f = −s sin(πx) sin(πy)`.
pub fn newton_source(grid: &GridSpec, s: f64) -> RealField {
    RealField::from_fn(grid, |x, y| -s * (PI * x).sin() * (PI * y).sin())
}

/// `F(u) = L_D u − u² − f`.
pub fn nonlinear_residual(u: &RealField, s: f64) -> Result<RealField> {
    let grid = u.grid();
    check_grid(grid)?;
    let lap = five_point_laplacian(grid, u.data());
    let f = newton_source(grid, s);
    let data = lap
        .iter()
        .zip(u.data())
        .zip(f.data())
        .map(|((l, u), f)| l - u * u - f)
        .collect();
    RealField::from_vec(*grid, data)
}

/// `J(u) v = L_D v − 2 u v`.
pub fn jacobian_apply(u: &RealField, v: &RealField) -> Result<RealField> {
    let grid = u.grid();
    check_grid(grid)?;
    let lap = five_point_laplacian(grid, v.data());
    let data = lap.iter().zip(u.data()).zip(v.data()).map(|((l, u), v)| l - 2.0 * u * v).collect();
    RealField::from_vec(*grid, data)
}

/// Sparse `J(u)` in compressed-column form.
pub fn sparse_jacobian(u: &RealField) -> Result<SparseColMat<usize, f64>> {
    let g = u.grid();
    check_grid(g)?;
    let (nx, ny) = (g.nx, g.ny);
    let (cx, cy) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let mut t = Vec::with_capacity(5 * g.len());
    for i in 0..nx {
        for j in 0..ny {
            let k = i * ny + j;
            t.push(Triplet::new(k, k, 2.0 * cx + 2.0 * cy - 2.0 * u.data()[k]));
            if i > 0 {
                t.push(Triplet::new(k, k - ny, -cx));
            }
            if i + 1 < nx {
                t.push(Triplet::new(k, k + ny, -cx));
            }
            if j > 0 {
                t.push(Triplet::new(k, k - 1, -cy));
            }
            if j + 1 < ny {
                t.push(Triplet::new(k, k + 1, -cy));
            }
        }
    }
    SparseColMat::try_new_from_triplets(g.len(), g.len(), &t).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
}

fn direct_solve(u: &RealField, rhs: &RealField) -> Result<RealField> {
    let lu = sparse_jacobian(u)?
        .sp_lu()
        .map_err(|e| Error::LinearAlgebra(format!("sparse lu: {e:?}")))?;
    let b = Mat::from_fn(rhs.data().len(), 1, |i, _| rhs.data()[i]);
    let x = lu.solve(&b);
    let data: Vec<f64> = (0..x.nrows()).map(|i| x[(i, 0)]).collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearAlgebra("singular jacobian".into()));
    }
    RealField::from_vec(*u.grid(), data)
}

/// Outcome of one inner linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerReport {
    pub iters: usize,
    /// `‖J δ + F‖ / ‖F‖`.
    pub rel_residual: f64,
    pub terminated: Option<Termination>,
}

/// One Newton update `u + δ` with `J(u) δ = −F(u)`.
pub fn newton_step(u: &RealField, config: &NewtonConfig) -> Result<(RealField, InnerReport)> {
    let fnl = nonlinear_residual(u, config.s)?;
    let rhs = fnl.map(|v| -v);
    let (delta, iters, terminated) = match &config.inner {
        InnerSolver::Direct => (direct_solve(u, &rhs)?, 0, None),
        InnerSolver::Iterative { config: inner, map } => {
            let problem = NewtonJacobianProblem::new(u.clone(), config.alpha)?;
            let (d, trace) = run(&problem, map, &rhs.to_complex(), inner, None)?;
            if trace.terminated == Termination::Diverged {
                return Err(Error::Newton(format!(
                    "inner {} iteration diverged after {} steps (relative residual {:e})",
                    inner.format,
                    trace.iters,
                    trace.final_l2()
                )));
            }
            (d.real_part(), trace.iters, Some(trace.terminated))
        }
    };
    let jd = jacobian_apply(u, &delta)?;
    let rn = rhs.norm();
    let rel = if rn > 0.0 { jd.zip_with(&rhs, |a, b| a - b)?.norm() / rn } else { 0.0 };
    let next = u.zip_with(&delta, |a, b| a + b)?;
    Ok((next, InnerReport { iters, rel_residual: rel, terminated }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonTrace {
    /// `‖F(u^(m))‖₂` for `m = 0, 1, …`.
    pub residual_norms: Vec<f64>,
    /// Inner iterations of each outer step.
    pub inner_iters: Vec<usize>,
    pub inner_rel_residuals: Vec<f64>,
    pub u: RealField,
    pub converged: bool,
}

impl NewtonTrace {
    pub fn outer_steps(&self) -> usize {
        self.inner_iters.len()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&f64::NAN)
    }
}

/// Iterates [`newton_step`] until `‖F‖₂ ≤ outer_tol` or `max_outer` steps. No damping or
/// line search is applied. A blown-up iterate ends the run unconverged.
pub fn solve_newton(u0: &RealField, config: &NewtonConfig) -> Result<NewtonTrace> {
    config.validate()?;
    check_grid(u0.grid())?;
    let mut u = u0.clone();
    let mut trace = NewtonTrace {
        residual_norms: Vec::new(),
        inner_iters: Vec::new(),
        inner_rel_residuals: Vec::new(),
        u: u0.clone(),
        converged: false,
    };
    loop {
        let norm = nonlinear_residual(&u, config.s)?.norm();
        trace.residual_norms.push(norm);
        if !norm.is_finite() {
            break;
        }
        if norm <= config.outer_tol {
            trace.converged = true;
            break;
        }
        if trace.inner_iters.len() >= config.max_outer {
            break;
        }
        let (next, report) = newton_step(&u, config)?;
        trace.inner_iters.push(report.iters);
        trace.inner_rel_residuals.push(report.rel_residual);
        if next.data().iter().any(|v| !v.is_finite()) {
            trace.residual_norms.push(f64::INFINITY);
            break;
        }
        u = next;
    }
    trace.u = u;
    Ok(trace)
}

/// CSV with columns `outer_step,F_nl_norm,inner_iters`; the last row has no inner solve.
pub fn write_newton_csv<W: Write>(mut w: W, trace: &NewtonTrace) -> Result<()> {
    writeln!(w, "outer_step,F_nl_norm,inner_iters")?;
    for (k, norm) in trace.residual_norms.iter().enumerate() {
        match trace.inner_iters.get(k) {
            Some(it) => writeln!(w, "{k},{norm:e},{it}")?,
            None => writeln!(w, "{k},{norm:e},")?,
        }
    }
    Ok(())
}

/// Relative `L²` distance `‖a − b‖ / ‖a‖`.
pub fn relative_distance(a: &RealField, b: &RealField) -> Result<f64> {
    Ok(a.zip_with(b, |x, y| x - y)?.norm() / a.norm())
}
