//! Residual-metric losses and a trainer for the diagonal Fourier correction map.
//!
//! For a probe `r` the three objectives measure
//!
//! * `Dir`:    `‖A M r − r‖ / ‖r‖`
//! * `BsL2`:   `‖A M G r − r‖ / ‖r‖`
//! * `BsReta`: `‖(I − GV) M G r − G r‖ / ‖G r‖`, which equals `‖A M G r − r‖_{R_η} / ‖r‖_{R_η}`
//!
//! and the reported loss is the mean of these ratios over the probes. Training minimizes
//! the mean of the squared ratios instead; it is smooth and has the same minimizers
//! per probe.
//!
//! With `M x = T⁻¹(m ⊙ T x)` every residual is affine in `m`, `e = B m − t` with
//! `B = K T⁻¹ diag(T x)`, so the gradient is `2 conj(T x) ⊙ T⁻*(K* e) / ‖t‖²`.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::correction::{apply_correction, CorrectionMap, FourierDiag};
use crate::error::{Error, Result};
use crate::fields::{ComplexField, RngState};
use crate::problems::SplitProblem;
use crate::spectral::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Dir,
    BsL2,
    BsReta,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Dir, LossKind::BsL2, LossKind::BsReta];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dir => "dir",
            Self::BsL2 => "bs_l2",
            Self::BsReta => "bs_reta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "dir" | "direct" => Ok(Self::Dir),
            "bs_l2" | "bsl2" => Ok(Self::BsL2),
            "bs_reta" | "bsreta" => Ok(Self::BsReta),
            _ => Err(Error::InvalidParameter(format!("unknown loss kind {s:?} (expected dir, bs_l2 or bs_reta)"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where training probes come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeKind {
    /// Complex white noise.
    WhiteNoise,
    /// Stored residuals, one buffer per training problem (or a single shared buffer).
    Replay(Vec<Vec<ComplexField>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDistribution {
    pub kind: ProbeKind,
    pub batch: usize,
}

impl ProbeDistribution {
    pub fn white_noise(batch: usize) -> Self {
        Self { kind: ProbeKind::WhiteNoise, batch }
    }

    pub fn replay(batch: usize, buffers: Vec<Vec<ComplexField>>) -> Result<Self> {
        if buffers.is_empty() || buffers.iter().any(Vec::is_empty) {
            return Err(Error::EmptyBatch);
        }
        Ok(Self { kind: ProbeKind::Replay(buffers), batch })
    }

    /// Draws `batch` probes for training problem `index`.
    pub fn sample(&self, grid: &GridSpec, index: usize, rng: &mut RngState) -> Result<Vec<ComplexField>> {
        if self.batch == 0 {
            return Err(Error::EmptyBatch);
        }
        match &self.kind {
            ProbeKind::WhiteNoise => Ok((0..self.batch).map(|_| ComplexField::random_normal(grid, rng)).collect()),
            ProbeKind::Replay(buffers) => {
                let buf = if buffers.len() == 1 { &buffers[0] } else { &buffers[index % buffers.len()] };
                (0..self.batch)
                    .map(|_| {
                        let r = &buf[rng.index(buf.len())];
                        r.check_same(&ComplexField::zeros(grid))?;
                        Ok(r.clone())
                    })
                    .collect()
            }
        }
    }
}

/// Residual `e = K M x − t` of one probe, with `x` the map input and `t` the target.
struct ProbeTerm {
    x: ComplexField,
    e: ComplexField,
    denom: f64,
}

fn map_input(kind: LossKind, problem: &dyn SplitProblem, r: &ComplexField) -> Result<ComplexField> {
    match kind {
        LossKind::Dir => Ok(r.clone()),
        LossKind::BsL2 | LossKind::BsReta => problem.apply_g(r),
    }
}

/// `K y` for the operator of each loss.
fn apply_k(kind: LossKind, problem: &dyn SplitProblem, y: &ComplexField) -> Result<ComplexField> {
    match kind {
        LossKind::Dir | LossKind::BsL2 => problem.apply_a(y),
        LossKind::BsReta => problem.apply_born(y),
    }
}

fn apply_k_adjoint(kind: LossKind, problem: &dyn SplitProblem, y: &ComplexField) -> Result<ComplexField> {
    match kind {
        LossKind::Dir | LossKind::BsL2 => problem.apply_a_adjoint(y),
        LossKind::BsReta => problem.apply_born_adjoint(y),
    }
}

fn probe_term(kind: LossKind, problem: &dyn SplitProblem, map: &CorrectionMap, r: &ComplexField) -> Result<ProbeTerm> {
    let x = map_input(kind, problem, r)?;
    let t = match kind {
        LossKind::Dir | LossKind::BsL2 => r,
        LossKind::BsReta => &x,
    };
    let denom = t.norm_sqr();
    let e = apply_k(kind, problem, &apply_correction(map, &x, None)?)?.sub(t)?;
    Ok(ProbeTerm { x, e, denom })
}

fn check_probes(probes: &[ComplexField]) -> Result<()> {
    if probes.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(k) = probes.iter().position(|p| p.norm_sqr() == 0.0) {
        return Err(Error::ZeroProbe(k));
    }
    Ok(())
}

/// Mean over probes of the relative residual of `kind`.
pub fn eval_loss(kind: LossKind, problem: &dyn SplitProblem, map: &CorrectionMap, probes: &[ComplexField]) -> Result<f64> {
    check_probes(probes)?;
    let ratios = probes
        .par_iter()
        .map(|r| probe_term(kind, problem, map, r).map(|t| (t.e.norm_sqr() / t.denom).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ratios.iter().sum::<f64>() / probes.len() as f64)
}

/// `BsReta` through the metric form `‖G(A M G r − r)‖ / ‖G r‖`.
pub fn eval_loss_riesz_form(problem: &dyn SplitProblem, map: &CorrectionMap, probes: &[ComplexField]) -> Result<f64> {
    check_probes(probes)?;
    let ratios = probes
        .par_iter()
        .map(|r| -> Result<f64> {
            let gr = problem.apply_g(r)?;
            let res = problem.apply_a(&apply_correction(map, &gr, None)?)?.sub(r)?;
            Ok(problem.apply_g(&res)?.norm() / gr.norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ratios.iter().sum::<f64>() / probes.len() as f64)
}

fn fourier_diag(map: &CorrectionMap) -> Result<&FourierDiag> {
    match map {
        CorrectionMap::FourierDiag(d) => Ok(d),
        _ => Err(Error::NotFourierDiag),
    }
}

/// Complex gradient `2 conj(T x) ⊙ T⁻*(K* e) / denom` of one probe's squared ratio.
fn probe_gradient(kind: LossKind, problem: &dyn SplitProblem, diag: &FourierDiag, term: &ProbeTerm) -> Result<Vec<Complex64>> {
    let t = diag.transform();
    let rho = t.forward(term.x.data())?;
    let back = t.inverse_adjoint(apply_k_adjoint(kind, problem, &term.e)?.data())?;
    let s = 2.0 / term.denom;
    Ok(rho.iter().zip(&back).map(|(p, b)| p.conj() * b * s).collect())
}

/// Mean squared relative residual and its gradient with respect to `θ = [Re m, Im m]`.
pub fn loss_gradient(
    kind: LossKind,
    problem: &dyn SplitProblem,
    map: &CorrectionMap,
    probes: &[ComplexField],
) -> Result<(f64, Vec<f64>)> {
    let diag = fourier_diag(map)?;
    check_probes(probes)?;
    let parts = probes
        .par_iter()
        .map(|r| {
            let term = probe_term(kind, problem, map, r)?;
            Ok((term.e.norm_sqr() / term.denom, probe_gradient(kind, problem, diag, &term)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = diag.modes().len();
    let scale = 1.0 / probes.len() as f64;
    let mut value = 0.0;
    let mut g = vec![Complex64::ZERO; n];
    for (v, pg) in parts {
        value += v * scale;
        g.iter_mut().zip(&pg).for_each(|(a, b)| *a += b * scale);
    }
    Ok((value, g.iter().map(|v| v.re).chain(g.iter().map(|v| v.im)).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Gradient descent; the step is halved whenever it would raise the loss.
    GradientDescent,
    /// Conjugate gradients on the normal equations of the (quadratic) training loss,
    /// with a diagonal preconditioner from the constant-coefficient part of the operator.
    ConjugateGradient,
}

impl Optimizer {
    pub fn name(self) -> &'static str {
        match self {
            Self::GradientDescent => "gd",
            Self::ConjugateGradient => "pcg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gd" => Ok(Self::GradientDescent),
            "pcg" | "cg" => Ok(Self::ConjugateGradient),
            _ => Err(Error::InvalidParameter(format!("unknown optimizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Optimizer steps.
    pub epochs: usize,
    /// Probes per training problem.
    pub batch: usize,
    /// Initial gradient-descent step.
    pub step_size: f64,
    /// Factor applied to the step when it fails to decrease the loss.
    pub step_decay: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch: 32,
            step_size: 1.0,
            step_decay: 0.5,
            seed: 0,
            optimizer: Optimizer::GradientDescent,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::EmptyBatch);
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!("step_size must be positive, got {}", self.step_size)));
        }
        if !(self.step_decay > 0.0 && self.step_decay < 1.0) {
            return Err(Error::InvalidParameter(format!("step_decay must lie in (0, 1), got {}", self.step_decay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub step: usize,
    /// Mean squared relative residual over the training probes.
    pub loss: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub map: FourierDiag,
    pub log: Vec<LogEntry>,
}

impl TrainResult {
    pub fn final_loss(&self) -> f64 {
        self.log.last().map_or(f64::NAN, |e| e.loss)
    }
}

/// CSV with columns `step,loss,step_size`.
pub fn write_training_log<W: Write>(mut w: W, log: &[LogEntry]) -> Result<()> {
    writeln!(w, "step,loss,step_size")?;
    for e in log {
        writeln!(w, "{},{:e},{:e}", e.step, e.loss, e.step_size)?;
    }
    Ok(())
}

/// One training problem with its fixed probe set and the cached map inputs `T x`.
struct Sample<'a> {
    problem: &'a dyn SplitProblem,
    probes: Vec<ProbeData>,
}

struct ProbeData {
    rho: Vec<Complex64>,
    target: ComplexField,
    denom: f64,
}

impl Sample<'_> {
    /// `B d = K T⁻¹(ρ ⊙ d)` for each probe.
    fn forward(&self, kind: LossKind, diag: &FourierDiag, d: &[Complex64]) -> Result<Vec<ComplexField>> {
        let t = diag.transform();
        self.probes
            .par_iter()
            .map(|p| {
                let modes: Vec<_> = p.rho.iter().zip(d).map(|(a, b)| a * b).collect();
                apply_k(kind, self.problem, &t.inverse_to_field(&modes)?)
            })
            .collect()
    }

    /// `Σ_p conj(ρ) ⊙ T⁻*(K* y_p) / denom_p`.
    fn adjoint(&self, kind: LossKind, diag: &FourierDiag, ys: &[ComplexField]) -> Result<Vec<Complex64>> {
        let t = diag.transform();
        let parts = self
            .probes
            .par_iter()
            .zip(ys)
            .map(|(p, y)| {
                let back = t.inverse_adjoint(apply_k_adjoint(kind, self.problem, y)?.data())?;
                Ok(p.rho.iter().zip(&back).map(|(a, b)| a.conj() * b / p.denom).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![Complex64::ZERO; diag.modes().len()];
        for part in parts {
            out.iter_mut().zip(&part).for_each(|(o, v)| *o += v);
        }
        Ok(out)
    }
}

fn build_samples<'a>(
    kind: LossKind,
    problems: &[&'a dyn SplitProblem],
    probes: &ProbeDistribution,
    cfg: &TrainConfig,
    diag: &FourierDiag,
) -> Result<Vec<Sample<'a>>> {
    let root = RngState::new(cfg.seed);
    problems
        .iter()
        .enumerate()
        .map(|(idx, &problem)| {
            let mut rng = root.split(idx as u64);
            let rs = probes.sample(problem.grid(), idx, &mut rng)?;
            check_probes(&rs)?;
            let data = rs
                .par_iter()
                .map(|r| {
                    let x = map_input(kind, problem, r)?;
                    let rho = diag.transform().forward(x.data())?;
                    let target = if kind == LossKind::BsReta { x } else { r.clone() };
                    let denom = target.norm_sqr();
                    Ok(ProbeData { rho, target, denom })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Sample { problem, probes: data })
        })
        .collect()
}

/// Normalized training loss `(1/P) Σ ‖e_p‖² / denom_p` from per-probe residuals.
fn objective(samples: &[Sample<'_>], residuals: &[Vec<ComplexField>]) -> f64 {
    let count: usize = samples.iter().map(|s| s.probes.len()).sum();
    let total: f64 = samples
        .iter()
        .zip(residuals)
        .flat_map(|(s, es)| s.probes.iter().zip(es).map(|(p, e)| e.norm_sqr() / p.denom))
        .sum();
    total / count as f64
}

fn residuals(kind: LossKind, samples: &[Sample<'_>], diag: &FourierDiag) -> Result<Vec<Vec<ComplexField>>> {
    samples
        .iter()
        .map(|s| {
            let bm = s.forward(kind, diag, diag.modes())?;
            bm.into_iter().zip(&s.probes).map(|(b, p)| b.sub(&p.target)).collect()
        })
        .collect()
}

/// Complex gradient `(2/P) Σ B*e/denom`.
fn gradient(kind: LossKind, samples: &[Sample<'_>], diag: &FourierDiag, es: &[Vec<ComplexField>]) -> Result<Vec<Complex64>> {
    let count: usize = samples.iter().map(|s| s.probes.len()).sum();
    let mut g = vec![Complex64::ZERO; diag.modes().len()];
    for (s, e) in samples.iter().zip(es) {
        let part = s.adjoint(kind, diag, e)?;
        g.iter_mut().zip(&part).for_each(|(a, b)| *a += b);
    }
    let scale = 2.0 / count as f64;
    g.iter_mut().for_each(|v| *v *= scale);
    Ok(g)
}

fn check_finite(loss: f64, step: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("training loss at step {step} is {loss}")))
    }
}

/// Diagonal preconditioner: `P_k ≈ (2/P) Σ_p |ρ_pk|² |k̄_k|² c / denom_p`, where `k̄` is
/// the symbol of `K` with `V` replaced by its mean and `c = ‖T⁻¹ e_k‖²`.
fn preconditioner(kind: LossKind, samples: &[Sample<'_>], diag: &FourierDiag) -> Result<Vec<f64>> {
    let t = diag.transform();
    let n = diag.modes().len();
    let count: usize = samples.iter().map(|s| s.probes.len()).sum();
    let unit = {
        let mut e0 = vec![Complex64::ZERO; n];
        e0[0] = Complex64::ONE;
        t.inverse(&e0)?.iter().map(|v| v.norm_sqr()).sum::<f64>()
    };
    let mut p = vec![0.0; n];
    for s in samples {
        let grid = s.problem.grid();
        let ones = ComplexField::constant(grid, Complex64::ONE);
        let vbar = ones.dot(&s.problem.apply_v(&ones)?) / grid.len() as f64;
        let lam = &s.problem.reference().symbol().values;
        for pr in &s.probes {
            for k in 0..n {
                let a = lam[k] - vbar;
                let kk = match kind {
                    LossKind::Dir | LossKind::BsL2 => a.norm_sqr(),
                    LossKind::BsReta => (a / lam[k]).norm_sqr(),
                };
                p[k] += pr.rho[k].norm_sqr() * kk * unit / pr.denom;
            }
        }
    }
    let scale = 2.0 / count as f64;
    let max = p.iter().copied().fold(0.0, f64::max);
    Ok(p.into_iter().map(|v| (v * scale).max(1e-12 * max * scale).max(f64::MIN_POSITIVE)).collect())
}

/// Trains a [`FourierDiag`] map from `m ≡ 1` over a set of problems sharing one grid.
///
/// Probes are drawn once per problem from `probes`, using child streams of `cfg.seed`,
/// so the result is a deterministic function of the inputs.
pub fn train_map(
    kind: LossKind,
    problems: &[&dyn SplitProblem],
    probes: &ProbeDistribution,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    let first = problems.first().ok_or(Error::EmptyBatch)?;
    let init = FourierDiag::identity(first.transform().clone());
    train_map_from(kind, problems, probes, cfg, init)
}

pub fn train_map_from(
    kind: LossKind,
    problems: &[&dyn SplitProblem],
    probes: &ProbeDistribution,
    cfg: &TrainConfig,
    init: FourierDiag,
) -> Result<TrainResult> {
    cfg.validate()?;
    if problems.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for p in problems {
        if p.grid() != init.transform().grid() || p.transform().kind() != init.kind() {
            return Err(crate::error::mismatch(init.transform().grid().describe(), p.grid().describe()));
        }
    }
    let probes = ProbeDistribution { batch: cfg.batch, ..probes.clone() };
    let samples = build_samples(kind, problems, &probes, cfg, &init)?;
    match cfg.optimizer {
        Optimizer::GradientDescent => gradient_descent(kind, &samples, cfg, init),
        Optimizer::ConjugateGradient => conjugate_gradient(kind, &samples, cfg, init),
    }
}

fn gradient_descent(kind: LossKind, samples: &[Sample<'_>], cfg: &TrainConfig, mut diag: FourierDiag) -> Result<TrainResult> {
    let mut es = residuals(kind, samples, &diag)?;
    let mut loss = objective(samples, &es);
    check_finite(loss, 0)?;
    let mut lr = cfg.step_size;
    let mut log = vec![LogEntry { step: 0, loss, step_size: lr }];
    for step in 1..=cfg.epochs {
        let g = gradient(kind, samples, &diag, &es)?;
        // Halve until the loss does not increase; a vanishing step means a minimum.
        loop {
            let trial: Vec<_> = diag.modes().iter().zip(&g).map(|(m, d)| m - d * lr).collect();
            let cand = FourierDiag::from_modes(diag.transform().clone(), trial)?;
            let ces = residuals(kind, samples, &cand)?;
            let closs = objective(samples, &ces);
            if closs.is_finite() && closs <= loss {
                diag = cand;
                es = ces;
                loss = closs;
                break;
            }
            lr *= cfg.step_decay;
            if lr < 1e-30 * cfg.step_size {
                break;
            }
        }
        check_finite(loss, step)?;
        log.push(LogEntry { step, loss, step_size: lr });
    }
    Ok(TrainResult { map: diag, log })
}

fn conjugate_gradient(kind: LossKind, samples: &[Sample<'_>], cfg: &TrainConfig, mut diag: FourierDiag) -> Result<TrainResult> {
    let precond = preconditioner(kind, samples, &diag)?;
    let mut es = residuals(kind, samples, &diag)?;
    let mut loss = objective(samples, &es);
    check_finite(loss, 0)?;
    let count: usize = samples.iter().map(|s| s.probes.len()).sum();
    let mut log = vec![LogEntry { step: 0, loss, step_size: 0.0 }];
    // Normal equations H m = b with residual s = b − H m = −∇.
    let mut s: Vec<Complex64> = gradient(kind, samples, &diag, &es)?.iter().map(|v| -v).collect();
    let mut z: Vec<Complex64> = s.iter().zip(&precond).map(|(a, p)| a / p).collect();
    let mut dir = z.clone();
    let mut sz: f64 = s.iter().zip(&z).map(|(a, b)| (a.conj() * b).re).sum();
    for step in 1..=cfg.epochs {
        if sz <= 0.0 || !sz.is_finite() {
            log.push(LogEntry { step, loss, step_size: 0.0 });
            continue;
        }
        let bd: Vec<Vec<ComplexField>> = samples.iter().map(|smp| smp.forward(kind, &diag, &dir)).collect::<Result<_>>()?;
        let mut hd = vec![Complex64::ZERO; dir.len()];
        for (smp, b) in samples.iter().zip(&bd) {
            let part = smp.adjoint(kind, &diag, b)?;
            hd.iter_mut().zip(&part).for_each(|(a, v)| *a += v);
        }
        let scale = 2.0 / count as f64;
        hd.iter_mut().for_each(|v| *v *= scale);
        let curv: f64 = dir.iter().zip(&hd).map(|(a, b)| (a.conj() * b).re).sum();
        if curv <= 0.0 || !curv.is_finite() {
            log.push(LogEntry { step, loss, step_size: 0.0 });
            sz = 0.0;
            continue;
        }
        let alpha = sz / curv;
        let modes: Vec<_> = diag.modes().iter().zip(&dir).map(|(m, d)| m + d * alpha).collect();
        diag = FourierDiag::from_modes(diag.transform().clone(), modes)?;
        for (e_s, b_s) in es.iter_mut().zip(&bd) {
            for (e, b) in e_s.iter_mut().zip(b_s) {
                e.axpy(Complex64::new(alpha, 0.0), b)?;
            }
        }
        loss = objective(samples, &es);
        check_finite(loss, step)?;
        log.push(LogEntry { step, loss, step_size: alpha });
        s.iter_mut().zip(&hd).for_each(|(a, h)| *a -= h * alpha);
        z = s.iter().zip(&precond).map(|(a, p)| a / p).collect();
        let sz_new: f64 = s.iter().zip(&z).map(|(a, b)| (a.conj() * b).re).sum();
        let beta = sz_new / sz;
        sz = sz_new;
        dir.iter_mut().zip(&z).for_each(|(d, zz)| *d = zz + *d * beta);
    }
    Ok(TrainResult { map: diag, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::DenseExact;
    use crate::fields::RealField;
    use crate::problems::{HelmholtzOptions, HelmholtzProblem};
    use crate::spectral::Transform2d;

    fn helmholtz(n: usize) -> HelmholtzProblem {
        let g = GridSpec::periodic(n, n, 1.0, 1.0).unwrap();
        let k = RealField::from_fn(&g, |x, y| 9.0 + 3.0 * (2.0 * std::f64::consts::PI * x).sin() * (1.0 + y));
        HelmholtzProblem::from_wavenumber(&k, None, HelmholtzOptions::default()).unwrap()
    }

    fn probes(grid: &GridSpec, n: usize, seed: u64) -> Vec<ComplexField> {
        let mut rng = RngState::new(seed);
        (0..n).map(|_| ComplexField::random_normal(grid, &mut rng)).collect()
    }

    #[test]
    fn exact_maps_give_zero_loss_and_zero_map_gives_one() {
        let p = helmholtz(8);
        let rs = probes(p.grid(), 4, 1);
        let a_inv = CorrectionMap::DenseExact(DenseExact::inverse_of_a(&p).unwrap());
        assert!(eval_loss(LossKind::Dir, &p, &a_inv, &rs).unwrap() <= 1e-10);
        let b_inv = CorrectionMap::DenseExact(DenseExact::inverse_of_born(&p).unwrap());
        assert!(eval_loss(LossKind::BsReta, &p, &b_inv, &rs).unwrap() <= 1e-10);
        assert!(eval_loss(LossKind::BsL2, &p, &b_inv, &rs).unwrap() <= 1e-10);
        let zero = CorrectionMap::Scalar(Complex64::ZERO);
        for kind in LossKind::ALL {
            assert!((eval_loss(kind, &p, &zero, &rs).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn riesz_form_matches_and_is_scale_invariant() {
        let p = helmholtz(8);
        let rs = probes(p.grid(), 6, 2);
        let map = CorrectionMap::FourierDiag(FourierDiag::identity(p.transform().clone()));
        let a = eval_loss(LossKind::BsReta, &p, &map, &rs).unwrap();
        let b = eval_loss_riesz_form(&p, &map, &rs).unwrap();
        assert!((a - b).abs() <= 1e-10 * a);
        let scaled: Vec<_> = rs.iter().map(|r| r.scale(Complex64::new(0.0, 10.0))).collect();
        let c = eval_loss(LossKind::BsReta, &p, &map, &scaled).unwrap();
        assert!((a - c).abs() <= 1e-12 * a);
    }

    #[test]
    fn probe_preconditions() {
        let p = helmholtz(8);
        let map = CorrectionMap::identity();
        assert!(matches!(eval_loss(LossKind::Dir, &p, &map, &[]), Err(Error::EmptyBatch)));
        let zero = vec![ComplexField::zeros(p.grid())];
        assert!(matches!(eval_loss(LossKind::Dir, &p, &map, &zero), Err(Error::ZeroProbe(0))));
        assert!(matches!(
            loss_gradient(LossKind::Dir, &p, &map, &probes(p.grid(), 1, 0)),
            Err(Error::NotFourierDiag)
        ));
        assert!(ProbeDistribution::replay(4, vec![]).is_err());
    }

    #[test]
    fn zero_epochs_returns_identity() {
        let p = helmholtz(8);
        let cfg = TrainConfig { epochs: 0, batch: 2, ..Default::default() };
        let out = train_map(LossKind::BsReta, &[&p], &ProbeDistribution::white_noise(2), &cfg).unwrap();
        assert_eq!(out.map, FourierDiag::identity(Transform2d::for_grid(p.grid()).unwrap()));
        assert_eq!(out.log.len(), 1);
    }

    #[test]
    fn both_optimizers_decrease_the_loss_monotonically() {
        let p = helmholtz(8);
        for optimizer in [Optimizer::GradientDescent, Optimizer::ConjugateGradient] {
            let cfg = TrainConfig { epochs: 15, batch: 4, optimizer, ..Default::default() };
            let out = train_map(LossKind::BsL2, &[&p], &ProbeDistribution::white_noise(4), &cfg).unwrap();
            assert!(out.log.windows(2).all(|w| w[1].loss <= w[0].loss * (1.0 + 1e-12)), "{optimizer:?}");
            assert!(out.final_loss() < out.log[0].loss);
        }
    }

    #[test]
    fn homogeneous_medium_reaches_the_closed_form_optimum() {
        // with V = −iη constant, B is diagonal with b = 1 + iη g and the optimum is 1/b per mode
        let g = GridSpec::periodic(16, 16, 1.0, 1.0).unwrap();
        let k = RealField::constant(&g, 6.0);
        let p = HelmholtzProblem::from_wavenumber(&k, None, HelmholtzOptions { eta: Some(10.0), ..Default::default() }).unwrap();
        let optimum: Vec<Complex64> = p.symbol().values.iter().map(|l| 1.0 / (1.0 + Complex64::new(0.0, 10.0) / l)).collect();
        let probes = ProbeDistribution::white_noise(8);
        let gd = train_map(LossKind::BsReta, &[&p], &probes, &TrainConfig { batch: 8, ..Default::default() }).unwrap();
        assert!(gd.final_loss().sqrt() < 0.1, "{}", gd.final_loss());
        let cfg = TrainConfig { batch: 8, optimizer: Optimizer::ConjugateGradient, ..Default::default() };
        let pcg = train_map(LossKind::BsReta, &[&p], &probes, &cfg).unwrap();
        let worst = pcg.map.modes().iter().zip(&optimum).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
        let samples = build_samples(LossKind::BsReta, &[&p], &probes, &cfg, &pcg.map).unwrap();
        let es = residuals(LossKind::BsReta, &samples, &pcg.map).unwrap();
        let grad = gradient(LossKind::BsReta, &samples, &pcg.map, &es).unwrap();
        assert!(grad.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() < 1e-8);
    }

    #[test]
    fn training_log_csv() {
        let mut buf = Vec::new();
        write_training_log(&mut buf, &[LogEntry { step: 0, loss: 0.5, step_size: 1.0 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,loss,step_size\n0,5e-1,1e0\n");
    }
}
