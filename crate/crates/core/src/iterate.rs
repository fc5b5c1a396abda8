//! Direct, CBS and NPBS iterations, residual metrics and spectral diagnostics.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;

use crate::correction::{apply_correction, CorrectionMap, StepContext};
use crate::error::{Error, Result};
use crate::fields::{ComplexField, RngState};
use crate::problems::{assemble_dense_born, SplitProblem, DENSE_CAP};

/// Relative residual above which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;
/// Window and tolerance of the stagnation detector.
pub const STAGNATION_WINDOW: usize = 20;
pub const STAGNATION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    /// `u ← u + M(f − A u)`.
    Direct,
    /// `u ← u + γ G(f − A u)`, with a scalar map supplying `γ`.
    Cbs,
    /// `u ← u + M(G(V u + f) − u)`.
    Npbs,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Cbs => "cbs",
            Self::Npbs => "npbs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Self::Direct),
            "cbs" => Ok(Self::Cbs),
            "npbs" => Ok(Self::Npbs),
            _ => Err(Error::InvalidParameter(format!("unknown iteration format {s:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub format: Format,
    pub rtol: f64,
    pub max_iters: usize,
}

impl IterationConfig {
    pub fn new(format: Format, rtol: f64, max_iters: usize) -> Result<Self> {
        if !(rtol > 0.0 && rtol < 1.0) {
            return Err(Error::InvalidParameter(format!("rtol must lie in (0, 1), got {rtol}")));
        }
        if max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(Self { format, rtol, max_iters })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Converged,
    MaxIters,
    Diverged,
    Stagnated,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIters => "max_iters",
            Self::Diverged => "diverged",
            Self::Stagnated => "stagnated",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Relative residuals per step, including the initial one: `‖f − Au‖/‖f‖` and
/// `‖G(f − Au)‖/‖Gf‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub residual_l2: Vec<f64>,
    pub residual_reta: Vec<f64>,
    pub iters: usize,
    pub terminated: Termination,
}

impl IterationTrace {
    pub fn final_l2(&self) -> f64 {
        *self.residual_l2.last().unwrap_or(&f64::NAN)
    }

    pub fn final_reta(&self) -> f64 {
        *self.residual_reta.last().unwrap_or(&f64::NAN)
    }

    pub fn converged(&self) -> bool {
        self.terminated == Termination::Converged
    }
}

/// CSV with columns `step,res_l2_rel,res_Reta_rel`.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &IterationTrace) -> Result<()> {
    writeln!(w, "step,res_l2_rel,res_Reta_rel")?;
    for (k, (a, b)) in trace.residual_l2.iter().zip(&trace.residual_reta).enumerate() {
        writeln!(w, "{k},{a:e},{b:e}")?;
    }
    Ok(())
}

/// `f − A u`.
pub fn residual(problem: &dyn SplitProblem, u: &ComplexField, f: &ComplexField) -> Result<ComplexField> {
    f.sub(&problem.apply_a(u)?)
}

/// Born residual `G(V u + f) − u`, equal to `G(f − A u)`.
pub fn born_residual(problem: &dyn SplitProblem, u: &ComplexField, f: &ComplexField) -> Result<ComplexField> {
    problem.apply_g(&problem.apply_v(u)?.add(f)?)?.sub(u)
}

/// `‖x‖_{R_η} = ‖G x‖₂`.
pub fn norm_reta(problem: &dyn SplitProblem, x: &ComplexField) -> Result<f64> {
    Ok(problem.apply_g(x)?.norm())
}

fn ensure_finite(u: ComplexField) -> Result<ComplexField> {
    if u.is_finite() {
        Ok(u)
    } else {
        Err(Error::NonFinite("iteration update".into()))
    }
}

fn update(u: &ComplexField, correction: &ComplexField) -> Result<ComplexField> {
    ensure_finite(u.add(correction)?)
}

pub fn step_direct(problem: &dyn SplitProblem, map: &CorrectionMap, u: &ComplexField, f: &ComplexField) -> Result<ComplexField> {
    let r = residual(problem, u, f)?;
    let ctx = StepContext { problem, residual: &r };
    update(u, &apply_correction(map, &r, Some(&ctx))?)
}

/// CBS in shifted-Laplacian Richardson form; only scalar maps are accepted.
pub fn step_cbs(problem: &dyn SplitProblem, map: &CorrectionMap, u: &ComplexField, f: &ComplexField) -> Result<ComplexField> {
    if !map.is_scalar() {
        return Err(Error::InvalidParameter(format!("cbs needs a scalar map, got {}", map.label())));
    }
    let r = residual(problem, u, f)?;
    let pr = problem.apply_g(&r)?;
    let ctx = StepContext { problem, residual: &r };
    update(u, &apply_correction(map, &pr, Some(&ctx))?)
}

pub fn step_npbs(problem: &dyn SplitProblem, map: &CorrectionMap, u: &ComplexField, f: &ComplexField) -> Result<ComplexField> {
    let rbs = born_residual(problem, u, f)?;
    match map {
        CorrectionMap::OptimalScalar(_) => {
            let r = residual(problem, u, f)?;
            let ctx = StepContext { problem, residual: &r };
            update(u, &apply_correction(map, &rbs, Some(&ctx))?)
        }
        _ => update(u, &apply_correction(map, &rbs, None)?),
    }
}

pub fn step(
    format: Format,
    problem: &dyn SplitProblem,
    map: &CorrectionMap,
    u: &ComplexField,
    f: &ComplexField,
) -> Result<ComplexField> {
    match format {
        Format::Direct => step_direct(problem, map, u, f),
        Format::Cbs => step_cbs(problem, map, u, f),
        Format::Npbs => step_npbs(problem, map, u, f),
    }
}

/// Iterates from `u0` (zero by default) until the relative Euclidean residual drops
/// to `rtol`, `max_iters` steps are taken, the residual blows up or stops moving.
///
/// Non-finite updates end the run as [`Termination::Diverged`] rather than an error.
pub fn run(
    problem: &dyn SplitProblem,
    map: &CorrectionMap,
    f: &ComplexField,
    config: &IterationConfig,
    u0: Option<&ComplexField>,
) -> Result<(ComplexField, IterationTrace)> {
    if config.format == Format::Cbs && !map.is_scalar() {
        return Err(Error::InvalidParameter(format!("cbs needs a scalar map, got {}", map.label())));
    }
    let f_norm = f.norm();
    if f_norm == 0.0 {
        return Err(Error::ZeroSource);
    }
    let gf_norm = norm_reta(problem, f)?;
    let mut u = match u0 {
        Some(u0) => {
            u0.check_same(f)?;
            u0.clone()
        }
        None => ComplexField::zeros(f.grid()),
    };
    let mut trace = IterationTrace {
        residual_l2: Vec::new(),
        residual_reta: Vec::new(),
        iters: 0,
        terminated: Termination::MaxIters,
    };
    loop {
        let r = residual(problem, &u, f)?;
        let gr = problem.apply_g(&r)?;
        let rel = r.norm() / f_norm;
        trace.residual_l2.push(rel);
        trace.residual_reta.push(gr.norm() / gf_norm);
        if !rel.is_finite() || rel > DIVERGENCE_THRESHOLD {
            trace.terminated = Termination::Diverged;
            break;
        }
        if rel <= config.rtol {
            trace.terminated = Termination::Converged;
            break;
        }
        if trace.iters >= config.max_iters {
            trace.terminated = Termination::MaxIters;
            break;
        }
        let k = trace.residual_l2.len() - 1;
        if k >= STAGNATION_WINDOW {
            let old = trace.residual_l2[k - STAGNATION_WINDOW];
            if (rel - old).abs() <= STAGNATION_TOL * old {
                trace.terminated = Termination::Stagnated;
                break;
            }
        }
        let ctx = StepContext { problem, residual: &r };
        let correction = match config.format {
            Format::Direct => apply_correction(map, &r, Some(&ctx))?,
            Format::Cbs => apply_correction(map, &gr, Some(&ctx))?,
            Format::Npbs => apply_correction(map, &born_residual(problem, &u, f)?, Some(&ctx))?,
        };
        let next = u.add(&correction)?;
        trace.iters += 1;
        if !next.is_finite() {
            trace.residual_l2.push(f64::INFINITY);
            trace.residual_reta.push(f64::INFINITY);
            trace.terminated = Termination::Diverged;
            break;
        }
        u = next;
    }
    Ok((u, trace))
}

/// Power iteration on `(GV)*(GV)` plus, for small problems, the dense spectrum of
/// `I − GV`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagnostics {
    /// Estimate of `‖GV‖₂`.
    pub rho_est: f64,
    pub power_converged: bool,
    pub sweeps: usize,
    pub dense: Option<DenseSpectrum>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpectrum {
    pub eigenvalues: Vec<Complex64>,
    /// `‖GV‖₂` from the singular values.
    pub norm_gv: f64,
    /// `κ₂(I − GV)`.
    pub kappa: f64,
    /// Radius used for the checks: the larger of the two norm estimates.
    pub rho: f64,
    /// Largest `|z − 1|` over the eigenvalues.
    pub max_shift: f64,
    pub disk_ok: bool,
    /// `(1 + ρ)/(1 − ρ)`, present only for `ρ < 1`.
    pub kappa_bound: Option<f64>,
    pub kappa_ok: Option<bool>,
}

pub const POWER_MAX_SWEEPS: usize = 500;
pub const POWER_TOL: f64 = 1e-12;
pub const DISK_SLACK: f64 = 1e-8;
pub const KAPPA_SLACK: f64 = 1e-6;

/// `(1 + ρ)/(1 − ρ)` when `ρ < 1`.
pub fn kappa_bound(rho: f64) -> Option<f64> {
    (rho < 1.0).then(|| (1.0 + rho) / (1.0 - rho))
}

/// Estimate of `‖GV‖₂` by power iteration on `(GV)*(GV)`.
pub fn estimate_norm_gv(problem: &dyn SplitProblem) -> Result<(f64, bool, usize)> {
    let mut x = ComplexField::random_normal(problem.grid(), &mut RngState::new(0x5EED));
    let n0 = x.norm();
    x = x.scale(Complex64::new(1.0 / n0, 0.0));
    let mut prev = f64::NAN;
    for sweep in 1..=POWER_MAX_SWEEPS {
        let y = problem.apply_g(&problem.apply_v(&x)?)?;
        let sigma2 = y.norm_sqr();
        if sigma2 == 0.0 {
            return Ok((0.0, true, sweep));
        }
        let z = problem.apply_v_adjoint(&problem.apply_g_adjoint(&y)?)?;
        let zn = z.norm();
        if !zn.is_finite() {
            return Err(Error::NonFinite("power iteration".into()));
        }
        x = z.scale(Complex64::new(1.0 / zn, 0.0));
        if (sigma2 - prev).abs() <= POWER_TOL * sigma2 {
            return Ok((sigma2.sqrt(), true, sweep));
        }
        prev = sigma2;
    }
    Ok((prev.sqrt(), false, POWER_MAX_SWEEPS))
}

pub fn spectral_diagnostics(problem: &dyn SplitProblem, dense: bool) -> Result<SpectralDiagnostics> {
    let (rho_est, power_converged, sweeps) = estimate_norm_gv(problem)?;
    let dense = if dense && problem.grid().len() <= DENSE_CAP { Some(dense_spectrum(problem, rho_est)?) } else { None };
    Ok(SpectralDiagnostics { rho_est, power_converged, sweeps, dense })
}

fn dense_spectrum(problem: &dyn SplitProblem, rho_est: f64) -> Result<DenseSpectrum> {
    let b = assemble_dense_born(problem)?;
    let n = b.nrows();
    let gv = faer::Mat::<faer::c64>::identity(n, n) - &b;
    let eigenvalues = b
        .eigenvalues()
        .map_err(|e| Error::LinearAlgebra(format!("eigenvalues: {e:?}")))?;
    let sv_gv = gv.singular_values().map_err(|e| Error::LinearAlgebra(format!("svd: {e:?}")))?;
    let sv_b = b.singular_values().map_err(|e| Error::LinearAlgebra(format!("svd: {e:?}")))?;
    let norm_gv = sv_gv.iter().copied().fold(0.0, f64::max);
    let smax = sv_b.iter().copied().fold(0.0, f64::max);
    let smin = sv_b.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa = smax / smin;
    let rho = rho_est.max(norm_gv);
    let max_shift = eigenvalues.iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
    let kb = kappa_bound(rho);
    Ok(DenseSpectrum {
        eigenvalues,
        norm_gv,
        kappa,
        rho,
        max_shift,
        disk_ok: max_shift <= rho + DISK_SLACK,
        kappa_bound: kb,
        kappa_ok: kb.map(|bound| kappa <= bound * (1.0 + KAPPA_SLACK)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::{DenseExact, ScalarMetric};
    use crate::fields::RealField;
    use crate::problems::{HelmholtzOptions, HelmholtzProblem, NewtonJacobianProblem};
    use crate::spectral::GridSpec;

    fn heterogeneous(n: usize) -> HelmholtzProblem {
        let g = GridSpec::periodic(n, n, 1.0, 1.0).unwrap();
        let k = RealField::from_fn(&g, |x, y| 10.0 + 2.0 * (2.0 * std::f64::consts::PI * x).cos() * y);
        HelmholtzProblem::from_wavenumber(&k, None, HelmholtzOptions::default()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(IterationConfig::new(Format::Npbs, 1e-6, 0).is_err());
        assert!(IterationConfig::new(Format::Npbs, 0.0, 5).is_err());
        assert!(IterationConfig::new(Format::Npbs, 1.0, 5).is_err());
        assert_eq!(Format::parse("NPBS").unwrap(), Format::Npbs);
    }

    #[test]
    fn trivial_steps() {
        let p = heterogeneous(8);
        let mut rng = RngState::new(1);
        let f = ComplexField::random_normal(p.grid(), &mut rng);
        let u = ComplexField::random_normal(p.grid(), &mut rng);
        assert_eq!(residual(&p, &ComplexField::zeros(p.grid()), &f).unwrap(), f);
        assert_eq!(step_direct(&p, &CorrectionMap::Scalar(Complex64::ZERO), &u, &f).unwrap(), u);
        let exact = DenseExact::inverse_of_a(&p).unwrap();
        let u1 = step_direct(&p, &CorrectionMap::DenseExact(exact), &u, &f).unwrap();
        assert!(residual(&p, &u1, &f).unwrap().norm() <= 1e-10 * f.norm());
        // fixed point
        let again = step_npbs(&p, &CorrectionMap::identity(), &u1, &f).unwrap();
        assert!(again.sub(&u1).unwrap().norm() <= 1e-9 * u1.norm());
    }

    #[test]
    fn loose_tolerance_converges_quickly() {
        let p = heterogeneous(16);
        let f = ComplexField::random_normal(p.grid(), &mut RngState::new(2));
        let cfg = IterationConfig::new(Format::Npbs, 0.99, 100).unwrap();
        let (_, t) = run(&p, &CorrectionMap::OptimalScalar(ScalarMetric::Euclidean), &f, &cfg, None).unwrap();
        assert!(t.converged() && t.iters <= 3, "{t:?}");
        assert_eq!(t.residual_l2.len(), t.iters + 1);
        assert!(matches!(run(&p, &CorrectionMap::identity(), &ComplexField::zeros(p.grid()), &cfg, None), Err(Error::ZeroSource)));
    }

    #[test]
    fn zero_scalar_stagnates() {
        let p = heterogeneous(8);
        let f = ComplexField::random_normal(p.grid(), &mut RngState::new(3));
        let cfg = IterationConfig::new(Format::Npbs, 1e-6, 100).unwrap();
        let (_, t) = run(&p, &CorrectionMap::Scalar(Complex64::ZERO), &f, &cfg, None).unwrap();
        assert_eq!(t.terminated, Termination::Stagnated);
        assert_eq!(t.iters, STAGNATION_WINDOW);
    }

    #[test]
    fn large_scalar_diverges() {
        let p = heterogeneous(8);
        let f = ComplexField::random_normal(p.grid(), &mut RngState::new(4));
        let cfg = IterationConfig::new(Format::Direct, 1e-6, 1000).unwrap();
        let (_, t) = run(&p, &CorrectionMap::Scalar(Complex64::new(1.0, 0.0)), &f, &cfg, None).unwrap();
        assert_eq!(t.terminated, Termination::Diverged);
    }

    #[test]
    fn homogeneous_norm_matches_symbol_maximum() {
        let g = GridSpec::periodic(16, 16, 1.0, 1.0).unwrap();
        let k0_sq = 120.0;
        let eta = 9.0;
        let p = HelmholtzProblem::new(ComplexField::constant(&g, Complex64::new(k0_sq, 0.0)), k0_sq, eta).unwrap();
        let closed = p.symbol().values.iter().map(|l| eta / l.norm()).fold(0.0, f64::max);
        let (est, ok, _) = estimate_norm_gv(&p).unwrap();
        assert!(ok);
        assert!((est - closed).abs() <= 1e-6 * closed, "{est} vs {closed}");
    }

    #[test]
    fn zero_remainder_has_unit_spectrum() {
        let g = GridSpec::unit_dirichlet(5).unwrap();
        let p = NewtonJacobianProblem::new(RealField::constant(&g, 1.5), 0.0).unwrap();
        let d = spectral_diagnostics(&p, true).unwrap();
        assert_eq!(d.rho_est, 0.0);
        let dense = d.dense.unwrap();
        assert!(dense.eigenvalues.iter().all(|z| (z - 1.0).norm() < 1e-12));
        assert_eq!(dense.kappa_bound, Some(1.0));
        assert_eq!(kappa_bound(0.5), Some(3.0));
        assert_eq!(kappa_bound(1.0), None);
    }

    #[test]
    fn trace_csv_layout() {
        let t = IterationTrace {
            residual_l2: vec![1.0, 0.5],
            residual_reta: vec![1.0, 0.25],
            iters: 1,
            terminated: Termination::MaxIters,
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &t).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,res_l2_rel,res_Reta_rel\n0,1e0,1e0\n1,5e-1,2.5e-1\n");
    }
}
