//! Invariant suites run by `bp verify`.

use std::fmt;
use std::io::Write;

use anyhow::{Context, Result};
use bornprec::config::Config;
use bornprec::correction::{CorrectionMap, FourierDiag};
use bornprec::fields::{ComplexField, RngState};
use bornprec::iterate::{born_residual, residual, spectral_diagnostics, KAPPA_SLACK};
use bornprec::problems::{
    assemble_dense_g, assemble_operator, five_point_laplacian, Family, InstanceFamily, ProblemInstance, SplitProblem,
};
use bornprec::spectral::{laplacian_symbol, GridSpec, Transform2d, TransformKind};
use bornprec::train::{eval_loss, eval_loss_riesz_form, loss_gradient, LossKind};
use clap::ValueEnum;
use faer::linalg::solvers::DenseSolveCore;
use num_complex::Complex64;

use crate::settings::instance_family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identity,
    Spectral,
    Riesz,
    Gradient,
    Transforms,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Identity, Suite::Spectral, Suite::Riesz, Suite::Gradient, Suite::Transforms];

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Spectral => "spectral",
            Self::Riesz => "riesz",
            Self::Gradient => "gradient",
            Self::Transforms => "transforms",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub family: String,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub status: Status,
    /// Where the worst case occurred, or why the check was skipped.
    pub detail: String,
}

impl Check {
    fn at_most(family: &str, name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        let status = if value <= tolerance { Status::Pass } else { Status::Fail };
        Self { family: family.into(), name: name.into(), value, tolerance, status, detail }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Report {
    /// Conjunction over all applicable checks.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn worst(&self, name: &str) -> Option<f64> {
        self.checks.iter().filter(|c| c.name == name).map(|c| c.value).reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "suite,family,check,value,tolerance,status,detail")?;
        for c in &self.checks {
            writeln!(
                w,
                "{},{},{},{:e},{:e},{},{}",
                self.suite.name(),
                c.family,
                c.name,
                c.value,
                c.tolerance,
                c.status,
                c.detail.replace(',', ";")
            )?;
        }
        Ok(())
    }

    pub fn print(&self) {
        for c in &self.checks {
            println!(
                "[{:>4}] {:<10} {:<10} {:<22} {:>10.3e} (tol {:.0e}) {}",
                c.status,
                self.suite.name(),
                c.family,
                c.name,
                c.value,
                c.tolerance,
                c.detail
            );
        }
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
    }
}

/// Sizes and probe counts, from the `[verify]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    /// Periodic grid side for the identity and Riesz suites; the Dirichlet grid uses `n − 1`.
    pub n: usize,
    pub identity_probes: usize,
    pub riesz_probes: usize,
    /// Grid side for dense spectra, at most 64.
    pub dense_n: usize,
    /// Grid side for the dense Green-operator comparison.
    pub green_n: usize,
    pub gradient_n: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { n: 64, identity_probes: 100, riesz_probes: 50, dense_n: 32, green_n: 16, gradient_n: 8 }
    }
}

impl VerifySettings {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let d = Self::default();
        let s = "verify";
        Ok(Self {
            n: cfg.get_or(s, "n", d.n)?,
            identity_probes: cfg.get_or(s, "identity_probes", d.identity_probes)?,
            riesz_probes: cfg.get_or(s, "riesz_probes", d.riesz_probes)?,
            dense_n: cfg.get_or(s, "dense_n", d.dense_n)?,
            green_n: cfg.get_or(s, "green_n", d.green_n)?,
            gradient_n: cfg.get_or(s, "gradient_n", d.gradient_n)?,
        })
    }
}

/// One instance per family: periodic families at side `n`, the Dirichlet family at
/// `n_dirichlet`. The sponge is scaled with the grid.
pub fn instances(cfg: &Config, n: usize, n_dirichlet: usize, root: &RngState) -> Result<Vec<(Family, ProblemInstance)>> {
    Family::ALL
        .iter()
        .enumerate()
        .map(|(k, &family)| {
            let fam = match instance_family(cfg, family)? {
                InstanceFamily::Helmholtz(mut h) => {
                    h.sponge_points = (h.sponge_points * n + h.n / 2) / h.n.max(1);
                    h.n = n;
                    InstanceFamily::Helmholtz(h)
                }
                InstanceFamily::Cdr(mut c) => {
                    c.n = n;
                    InstanceFamily::Cdr(c)
                }
                InstanceFamily::Newton(mut m) => {
                    m.n = n_dirichlet;
                    InstanceFamily::Newton(m)
                }
            };
            let inst = fam.instance(root, k as u64).with_context(|| format!("building {family} instance"))?;
            Ok((family, inst))
        })
        .collect()
}

fn rel_diff(a: &ComplexField, b: &ComplexField, scale: f64) -> Result<f64> {
    Ok(a.sub(b)?.norm() / scale)
}

/// Maximum of `f(probe)` over probes, with the index where it occurs.
fn worst_probe(
    grid: &GridSpec,
    probes: usize,
    rng: &mut RngState,
    mut f: impl FnMut(&ComplexField, &mut RngState) -> Result<f64>,
) -> Result<(f64, usize)> {
    let mut worst = (0.0f64, 0);
    for k in 0..probes {
        let r = ComplexField::random_normal(grid, rng);
        let v = f(&r, rng)?;
        if !(v <= worst.0) {
            worst = (v, k);
        }
    }
    Ok(worst)
}

fn identity_suite(cfg: &Config, s: &VerifySettings, root: &RngState) -> Result<Report> {
    let mut checks = Vec::new();
    for (k, (family, inst)) in instances(cfg, s.n, s.n - 1, root)?.into_iter().enumerate() {
        let p = inst.problem.as_split();
        let fam = family.name();
        let mut rng = root.split(100 + k as u64);
        let (key, at) = worst_probe(p.grid(), s.identity_probes, &mut rng, |r, _| {
            rel_diff(&p.apply_born(r)?, &p.apply_g(&p.apply_a(r)?)?, r.norm())
        })?;
        checks.push(Check::at_most(fam, "key_identity", key, 1e-12, format!("probe {at}")));
        let (split, at) = worst_probe(p.grid(), s.identity_probes, &mut rng, |r, _| {
            let a = p.apply_a(r)?;
            rel_diff(&p.apply_lref(r)?.sub(&p.apply_v(r)?)?, &a, a.norm())
        })?;
        checks.push(Check::at_most(fam, "splitting", split, 1e-12, format!("probe {at}")));
        let (green, at) = worst_probe(p.grid(), s.identity_probes, &mut rng, |r, _| {
            let left = rel_diff(&p.apply_lref(&p.apply_g(r)?)?, r, r.norm())?;
            let right = rel_diff(&p.apply_g(&p.apply_lref(r)?)?, r, r.norm())?;
            Ok(left.max(right))
        })?;
        checks.push(Check::at_most(fam, "green_inverse", green, 1e-12, format!("probe {at}")));
        let (forms, at) = worst_probe(p.grid(), s.identity_probes, &mut rng, |u, _| {
            let integral = p.apply_g(&p.apply_v(u)?.add(&inst.source)?)?.sub(u)?;
            let scale = u.norm() + inst.source.norm();
            let a = rel_diff(&integral, &born_residual(p, u, &inst.source)?, scale)?;
            let b = rel_diff(&integral, &p.apply_g(&residual(p, u, &inst.source)?)?, scale)?;
            Ok(a.max(b))
        })?;
        checks.push(Check::at_most(fam, "born_residual_forms", forms, 1e-12, format!("probe {at}")));
    }
    Ok(Report { suite: Suite::Identity, checks, warnings: Vec::new() })
}

fn random_diag(p: &dyn SplitProblem, rng: &mut RngState) -> Result<FourierDiag> {
    let m = (0..p.grid().len()).map(|_| Complex64::new(1.0 + 0.3 * rng.normal(), 0.3 * rng.normal())).collect();
    Ok(FourierDiag::from_modes(p.transform().clone(), m)?)
}

fn riesz_suite(cfg: &Config, s: &VerifySettings, root: &RngState) -> Result<Report> {
    let mut checks = Vec::new();
    for (k, (family, inst)) in instances(cfg, s.n, s.n - 1, root)?.into_iter().enumerate() {
        let p = inst.problem.as_split();
        let mut rng = root.split(200 + k as u64);
        let maps = [
            ("scalar", CorrectionMap::Scalar(Complex64::new(0.8 + 0.2 * rng.normal(), 0.2 * rng.normal()))),
            ("fourier_diag", CorrectionMap::FourierDiag(random_diag(p, &mut rng)?)),
        ];
        for (label, map) in &maps {
            let (gap, at) = worst_probe(p.grid(), s.riesz_probes, &mut rng, |r, _| {
                let probe = std::slice::from_ref(r);
                let a = eval_loss(LossKind::BsReta, p, map, probe)?;
                let b = eval_loss_riesz_form(p, map, probe)?;
                Ok((a - b).abs())
            })?;
            checks.push(Check::at_most(family.name(), &format!("riesz_{label}"), gap, 1e-10, format!("probe {at}")));
        }
    }
    Ok(Report { suite: Suite::Riesz, checks, warnings: Vec::new() })
}

fn spectral_suite(cfg: &Config, s: &VerifySettings, root: &RngState) -> Result<Report> {
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    for (family, inst) in instances(cfg, s.dense_n, s.dense_n, root)? {
        let fam = family.name();
        let p = inst.problem.as_split();
        let diag = spectral_diagnostics(p, true)?;
        let dense = diag.dense.context("dense spectrum missing")?;
        let rho = dense.rho;
        let radius = rho + bornprec::iterate::DISK_SLACK;
        checks.push(Check {
            family: fam.into(),
            name: "disk".into(),
            value: dense.max_shift,
            tolerance: radius,
            status: if dense.disk_ok { Status::Pass } else { Status::Fail },
            detail: format!("rho {rho:.6}"),
        });
        match (dense.kappa_bound, dense.kappa_ok) {
            (Some(bound), Some(ok)) => checks.push(Check {
                family: fam.into(),
                name: "kappa".into(),
                value: dense.kappa,
                tolerance: bound * (1.0 + KAPPA_SLACK),
                status: if ok { Status::Pass } else { Status::Fail },
                detail: format!("rho {rho:.6}"),
            }),
            _ => {
                warnings.push(format!("{fam}: rho = {rho:.4} >= 1, the condition-number bound does not apply"));
                checks.push(Check {
                    family: fam.into(),
                    name: "kappa".into(),
                    value: dense.kappa,
                    tolerance: f64::INFINITY,
                    status: Status::NotApplicable,
                    detail: format!("rho {rho:.6} not contracting"),
                });
            }
        }
        let gap = (diag.rho_est - dense.norm_gv).abs() / dense.norm_gv.max(f64::MIN_POSITIVE);
        if diag.power_converged {
            checks.push(Check::at_most(fam, "power_vs_svd", gap, 1e-6, format!("{} sweeps", diag.sweeps)));
        } else {
            warnings.push(format!("{fam}: power iteration not converged after {} sweeps", diag.sweeps));
            checks.push(Check {
                family: fam.into(),
                name: "power_vs_svd".into(),
                value: gap,
                tolerance: 1e-6,
                status: Status::NotApplicable,
                detail: "power iteration not converged".into(),
            });
        }
    }
    Ok(Report { suite: Suite::Spectral, checks, warnings })
}

fn gradient_suite(cfg: &Config, s: &VerifySettings, root: &RngState) -> Result<Report> {
    let mut checks = Vec::new();
    for (k, (family, inst)) in instances(cfg, s.gradient_n, s.gradient_n, root)?.into_iter().enumerate() {
        let p = inst.problem.as_split();
        let mut rng = root.split(300 + k as u64);
        let probes: Vec<_> = (0..4).map(|_| ComplexField::random_normal(p.grid(), &mut rng)).collect();
        let diag = random_diag(p, &mut rng)?;
        for kind in LossKind::ALL {
            let err = gradient_error(kind, p, &diag, &probes)?;
            checks.push(Check::at_most(family.name(), &format!("grad_{}", kind.name()), err, 1e-5, String::new()));
        }
    }
    Ok(Report { suite: Suite::Gradient, checks, warnings: Vec::new() })
}

/// `‖g − g_fd‖ / ‖g_fd‖` against central differences of the squared loss.
pub fn gradient_error(kind: LossKind, p: &dyn SplitProblem, diag: &FourierDiag, probes: &[ComplexField]) -> Result<f64> {
    let (_, grad) = loss_gradient(kind, p, &CorrectionMap::FourierDiag(diag.clone()), probes)?;
    let theta = diag.theta();
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, g) in grad.iter().enumerate() {
        let h = 1e-6 * theta[k].abs().max(1.0);
        let eval = |delta: f64| -> Result<f64> {
            let mut t = theta.clone();
            t[k] += delta;
            let mut d = diag.clone();
            d.set_theta(&t)?;
            Ok(loss_gradient(kind, p, &CorrectionMap::FourierDiag(d), probes)?.0)
        };
        let fd = (eval(h)? - eval(-h)?) / (2.0 * h);
        num += (g - fd).powi(2);
        den += fd * fd;
    }
    Ok((num / den).sqrt())
}

fn max_abs_entry(m: &faer::Mat<faer::c64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

fn transforms_suite(cfg: &Config, s: &VerifySettings, root: &RngState) -> Result<Report> {
    let mut checks = Vec::new();
    for (family, inst) in instances(cfg, s.green_n, s.green_n, root)? {
        let p = inst.problem.as_split();
        let g = assemble_dense_g(p)?;
        let l = assemble_operator(p.grid(), |u| p.apply_lref(u))?;
        let inv = l.partial_piv_lu().inverse();
        let err = max_abs_entry(&(&g - &inv)) / max_abs_entry(&inv);
        checks.push(Check::at_most(family.name(), "green_vs_dense_inverse", err, 1e-10, p.grid().describe()));
    }
    for n in [3usize, 5, 7] {
        let grid = GridSpec::unit_dirichlet(n)?;
        let dense = assemble_operator(&grid, |u| Ok(ComplexField::from_vec(*u.grid(), five_point_laplacian(&grid, u.data()))?))?;
        let mut eig: Vec<f64> = dense
            .eigenvalues()
            .map_err(|e| anyhow::anyhow!("eigenvalues: {e:?}"))?
            .iter()
            .map(|z| z.re)
            .collect();
        let mut sym: Vec<f64> = laplacian_symbol(&grid).values.iter().map(|z| z.re).collect();
        eig.sort_by(f64::total_cmp);
        sym.sort_by(f64::total_cmp);
        let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = eig.iter().zip(&sym).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        checks.push(Check::at_most("newton", "dst1_symbol", err, 1e-10, format!("N={n}")));
    }
    let mut rng = root.split(400);
    for (grid, kind) in [
        (GridSpec::periodic(16, 12, 1.0, 2.0)?, TransformKind::Fft),
        (GridSpec::unit_dirichlet(9)?, TransformKind::Dst1),
        (GridSpec::new(10, 7, 1.0, 1.0, bornprec::spectral::BoundaryCondition::Neumann)?, TransformKind::Dct),
    ] {
        let t = Transform2d::new(&grid, kind)?;
        let (worst, at) = worst_probe(&grid, 20, &mut rng, |x, _| {
            let back = t.inverse_to_field(&t.forward_field(x)?)?;
            rel_diff(&back, x, x.norm())
        })?;
        checks.push(Check::at_most("-", &format!("round_trip_{}", kind.name()), worst, 1e-12, format!("probe {at}")));
        if kind == TransformKind::Fft {
            let (worst, at) = worst_probe(&grid, 20, &mut rng, |x, _| {
                let modes = t.forward_field(x)?;
                let mode_norm = (modes.iter().map(|m| m.norm_sqr()).sum::<f64>() / grid.len() as f64).sqrt();
                Ok((mode_norm - x.norm()).abs() / x.norm())
            })?;
            checks.push(Check::at_most("-", "parseval_fft", worst, 1e-12, format!("probe {at}")));
        }
    }
    Ok(Report { suite: Suite::Transforms, checks, warnings: Vec::new() })
}

pub fn run_suite(suite: Suite, cfg: &Config, seed: u64) -> Result<Report> {
    let settings = VerifySettings::from_config(cfg)?;
    let root = RngState::new(seed);
    match suite {
        Suite::Identity => identity_suite(cfg, &settings, &root),
        Suite::Spectral => spectral_suite(cfg, &settings, &root),
        Suite::Riesz => riesz_suite(cfg, &settings, &root),
        Suite::Gradient => gradient_suite(cfg, &settings, &root),
        Suite::Transforms => transforms_suite(cfg, &settings, &root),
    }
}
