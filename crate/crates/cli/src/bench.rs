//! Benchmark sweeps: paired runs of several methods over seeded instance families.
//!
//! A sweep config looks like
//!
//! ```text
//! [sweep]
//! family = helmholtz
//! samples = 20
//! train_samples = 4
//! methods = direct, cbs, npbs_bs_l2, npbs_bs_reta
//! rtol = 1e-6
//! max_iters = 2000
//! ppw = 24, 20, 16, 12      # helmholtz only
//! contrast = 2              # helmholtz only
//! ```
//!
//! plus optional `[train]` and family sections (see [`crate::settings`]). Every cell
//! of the product `ppw × contrast × rtol` runs every method on the same held-out
//! instances.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use anyhow::{bail, Context, Result};
use bornprec::config::Config;
use bornprec::correction::{CorrectionMap, DenseExact, ScalarMetric};
use bornprec::fields::RngState;
use bornprec::iterate::{run, Format, IterationConfig, IterationTrace};
use bornprec::problems::{Family, InstanceFamily, ProblemInstance};
use bornprec::train::{LossKind, TrainConfig};
use rayon::prelude::*;

use crate::settings::{instance_family, train_settings, TEST_STREAM};
use crate::training::train_on_family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Direct format with a map trained on the direct loss.
    Direct,
    /// CBS with the per-step optimal scalar in the Euclidean metric.
    Cbs,
    /// CBS with the per-step optimal scalar in the `R_η` metric.
    CbsReta,
    NpbsBsL2,
    NpbsBsReta,
    /// NPBS with the exact inverse of `I − GV`; small grids only.
    NpbsDense,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Direct, Method::Cbs, Method::CbsReta, Method::NpbsBsL2, Method::NpbsBsReta, Method::NpbsDense];

    pub fn name(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Cbs => "cbs",
            Self::CbsReta => "cbs_reta",
            Self::NpbsBsL2 => "npbs_bs_l2",
            Self::NpbsBsReta => "npbs_bs_reta",
            Self::NpbsDense => "npbs_dense",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .with_context(|| format!("unknown method {s:?}"))
    }

    pub fn format(self) -> Format {
        match self {
            Self::Direct => Format::Direct,
            Self::Cbs | Self::CbsReta => Format::Cbs,
            Self::NpbsBsL2 | Self::NpbsBsReta | Self::NpbsDense => Format::Npbs,
        }
    }

    /// Loss the method's map is trained on, if any.
    pub fn loss(self) -> Option<LossKind> {
        match self {
            Self::Direct => Some(LossKind::Dir),
            Self::NpbsBsL2 => Some(LossKind::BsL2),
            Self::NpbsBsReta => Some(LossKind::BsReta),
            Self::Cbs | Self::CbsReta | Self::NpbsDense => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub family: InstanceFamily,
    pub samples: usize,
    pub train_samples: usize,
    pub methods: Vec<Method>,
    pub rtols: Vec<f64>,
    pub max_iters: usize,
    /// Empty unless the family is Helmholtz.
    pub ppw: Vec<f64>,
    pub contrast: Vec<f64>,
    pub train: TrainConfig,
}

impl SweepConfig {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self> {
        let s = "sweep";
        let family = Family::parse(&cfg.get_or(s, "family", "helmholtz".to_string())?)?;
        let methods = match cfg.get_list::<String>(s, "methods")? {
            Some(names) => names.iter().map(|n| Method::parse(n)).collect::<Result<Vec<_>>>()?,
            None => vec![Method::Direct, Method::Cbs, Method::NpbsBsL2, Method::NpbsBsReta],
        };
        let (train, train_samples) = train_settings(cfg, seed)?;
        let base = instance_family(cfg, family)?;
        let (ppw, contrast) = match &base {
            InstanceFamily::Helmholtz(h) => (
                cfg.get_list(s, "ppw")?.unwrap_or_else(|| vec![h.ppw]),
                cfg.get_list(s, "contrast")?.unwrap_or_else(|| vec![h.medium.contrast]),
            ),
            _ => {
                if cfg.raw(s, "ppw").is_some() || cfg.raw(s, "contrast").is_some() {
                    bail!("ppw and contrast sweeps apply to the helmholtz family only");
                }
                (Vec::new(), Vec::new())
            }
        };
        let sweep = Self {
            family: base,
            samples: cfg.get_or(s, "samples", 10)?,
            train_samples: cfg.get_or(s, "train_samples", train_samples)?,
            methods,
            rtols: cfg.get_list(s, "rtol")?.unwrap_or_else(|| vec![1e-6]),
            max_iters: cfg.get_or(s, "max_iters", 2000)?,
            ppw,
            contrast,
            train,
        };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.methods.is_empty() || self.rtols.is_empty() {
            bail!("a sweep needs at least one sample, method and rtol");
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            bail!("duplicate methods in sweep");
        }
        for &r in &self.rtols {
            IterationConfig::new(Format::Npbs, r, self.max_iters)?;
        }
        Ok(())
    }

    /// Instance family for one `(ppw, contrast)` pair.
    fn family_at(&self, ppw: Option<f64>, contrast: Option<f64>) -> InstanceFamily {
        match (&self.family, ppw, contrast) {
            (InstanceFamily::Helmholtz(h), Some(p), Some(c)) => {
                let mut h = h.clone();
                h.ppw = p;
                h.medium.contrast = c;
                InstanceFamily::Helmholtz(h)
            }
            (f, _, _) => f.clone(),
        }
    }

    fn media(&self) -> Vec<(Option<f64>, Option<f64>)> {
        if self.ppw.is_empty() {
            return vec![(None, None)];
        }
        self.ppw
            .iter()
            .flat_map(|&p| self.contrast.iter().map(move |&c| (Some(p), Some(c))))
            .collect()
    }
}

/// One method on one held-out instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub ppw: Option<f64>,
    pub contrast: Option<f64>,
    pub rtol: f64,
    pub method: Method,
    pub sample: usize,
    /// `Err` holds the failure message; the sweep continues past it.
    pub outcome: std::result::Result<RunOutcome, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub iters: usize,
    pub final_l2: f64,
    pub final_reta: f64,
    pub termination: String,
}

impl RunOutcome {
    fn from_trace(t: &IterationTrace) -> Self {
        Self { iters: t.iters, final_l2: t.final_l2(), final_reta: t.final_reta(), termination: t.terminated.name().into() }
    }

    pub fn converged(&self) -> bool {
        self.termination == "converged"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub ppw: Option<f64>,
    pub contrast: Option<f64>,
    pub rtol: f64,
    pub method: Method,
    pub runs: usize,
    pub failed: usize,
    pub converged: usize,
    pub mean_iters: f64,
    pub median_iters: f64,
    pub min_iters: usize,
    pub max_iters: usize,
    pub mean_final_l2: f64,
    /// Mean Direct iterations over mean NPBS-BsReta iterations in the same cell.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<CellSummary>,
    pub training: Vec<TrainingRecord>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub ppw: Option<f64>,
    pub contrast: Option<f64>,
    pub loss: LossKind,
    pub final_loss: f64,
    pub steps: usize,
}

fn run_method(
    method: Method,
    inst: &ProblemInstance,
    maps: &BTreeMap<Method, CorrectionMap>,
    rtol: f64,
    max_iters: usize,
) -> Result<RunOutcome> {
    let p = inst.problem.as_split();
    let owned;
    let map = match method {
        Method::Cbs => &CorrectionMap::OptimalScalar(ScalarMetric::Euclidean),
        Method::CbsReta => &CorrectionMap::OptimalScalar(ScalarMetric::REta),
        Method::NpbsDense => {
            owned = CorrectionMap::DenseExact(DenseExact::inverse_of_born(p)?);
            &owned
        }
        _ => maps.get(&method).context("missing trained map")?,
    };
    let config = IterationConfig::new(method.format(), rtol, max_iters)?;
    let (_, trace) = run(p, map, &inst.source, &config, None)?;
    Ok(RunOutcome::from_trace(&trace))
}

fn summarize(records: &[&RunRecord]) -> (usize, usize, usize, f64, f64, usize, usize, f64) {
    let ok: Vec<&RunOutcome> = records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let failed = records.len() - ok.len();
    let converged = ok.iter().filter(|o| o.converged()).count();
    if ok.is_empty() {
        return (records.len(), failed, 0, f64::NAN, f64::NAN, 0, 0, f64::NAN);
    }
    let mut iters: Vec<usize> = ok.iter().map(|o| o.iters).collect();
    iters.sort_unstable();
    let n = iters.len();
    let mean = iters.iter().sum::<usize>() as f64 / n as f64;
    let median = if n % 2 == 1 { iters[n / 2] as f64 } else { 0.5 * (iters[n / 2 - 1] + iters[n / 2]) as f64 };
    let mean_res = ok.iter().map(|o| o.final_l2).sum::<f64>() / n as f64;
    (records.len(), failed, converged, mean, median, iters[0], iters[n - 1], mean_res)
}

pub fn run_sweep(sweep: &SweepConfig, seed: u64) -> Result<SweepResult> {
    sweep.validate()?;
    let root = RngState::new(seed);
    let test_stream = root.split(TEST_STREAM);
    let mut runs = Vec::new();
    let mut training = Vec::new();
    for (ppw, contrast) in sweep.media() {
        let family = sweep.family_at(ppw, contrast);
        let mut maps = BTreeMap::new();
        for &method in &sweep.methods {
            if let Some(kind) = method.loss() {
                let result = train_on_family(kind, &family, &root, &sweep.train, sweep.train_samples)?;
                training.push(TrainingRecord {
                    ppw,
                    contrast,
                    loss: kind,
                    final_loss: result.final_loss(),
                    steps: result.log.len().saturating_sub(1),
                });
                maps.insert(method, CorrectionMap::FourierDiag(result.map));
            }
        }
        let per_sample: Vec<Vec<RunRecord>> = (0..sweep.samples)
            .into_par_iter()
            .map(|sample| {
                let inst = family.instance(&test_stream, sample as u64);
                let mut out = Vec::new();
                for &rtol in &sweep.rtols {
                    for &method in &sweep.methods {
                        let outcome = match &inst {
                            Ok(inst) => run_method(method, inst, &maps, rtol, sweep.max_iters).map_err(|e| format!("{e:#}")),
                            Err(e) => Err(format!("instance: {e}")),
                        };
                        out.push(RunRecord { ppw, contrast, rtol, method, sample, outcome });
                    }
                }
                out
            })
            .collect();
        runs.extend(per_sample.into_iter().flatten());
    }
    runs.sort_by(|a, b| {
        let key = |r: &RunRecord| (r.ppw.map(|v| -v), r.contrast, r.rtol, r.method, r.sample);
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut summary = Vec::new();
    let mut cells: Vec<(Option<f64>, Option<f64>, f64)> = Vec::new();
    for r in &runs {
        let cell = (r.ppw, r.contrast, r.rtol);
        if cells.last() != Some(&cell) {
            cells.push(cell);
        }
    }
    for &(ppw, contrast, rtol) in &cells {
        let in_cell: Vec<&RunRecord> =
            runs.iter().filter(|r| (r.ppw, r.contrast, r.rtol) == (ppw, contrast, rtol)).collect();
        let mut rows = Vec::new();
        for &method in &sweep.methods {
            let recs: Vec<&RunRecord> = in_cell.iter().copied().filter(|r| r.method == method).collect();
            let (runs_n, failed, converged, mean, median, lo, hi, res) = summarize(&recs);
            rows.push(CellSummary {
                ppw,
                contrast,
                rtol,
                method,
                runs: runs_n,
                failed,
                converged,
                mean_iters: mean,
                median_iters: median,
                min_iters: lo,
                max_iters: hi,
                mean_final_l2: res,
                ratio: None,
            });
        }
        let mean_of = |m: Method| rows.iter().find(|r| r.method == m).map(|r| r.mean_iters);
        let ratio = match (mean_of(Method::Direct), mean_of(Method::NpbsBsReta)) {
            (Some(d), Some(n)) if n > 0.0 && d.is_finite() => Some(d / n),
            _ => None,
        };
        rows.iter_mut().for_each(|r| r.ratio = ratio);
        summary.extend(rows);
    }
    let warnings = ratio_trend_warnings(&summary);
    Ok(SweepResult { runs, summary, training, warnings })
}

/// Soft check: along each `(contrast, rtol)` line the ratio should not fall as ppw
/// decreases.
fn ratio_trend_warnings(summary: &[CellSummary]) -> Vec<String> {
    let mut lines: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for s in summary.iter().filter(|s| s.method == Method::NpbsBsReta) {
        if let (Some(ppw), Some(ratio)) = (s.ppw, s.ratio) {
            lines.entry((fmt_opt(s.contrast), format!("{:e}", s.rtol))).or_default().push((ppw, ratio));
        }
    }
    let mut out = Vec::new();
    for ((contrast, rtol), mut pts) in lines {
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        for w in pts.windows(2) {
            if w[1].1 < w[0].1 {
                out.push(format!(
                    "ratio decreases from {:.3} (ppw {}) to {:.3} (ppw {}) at contrast {contrast}, rtol {rtol}",
                    w[0].1, w[0].0, w[1].1, w[1].0
                ));
            }
        }
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

pub fn write_runs_csv<W: Write>(mut w: W, runs: &[RunRecord]) -> Result<()> {
    writeln!(w, "ppw,contrast,rtol,method,sample,iters,final_res_l2,final_res_Reta,termination")?;
    for r in runs {
        let head = format!("{},{},{:e},{},{}", fmt_opt(r.ppw), fmt_opt(r.contrast), r.rtol, r.method, r.sample);
        match &r.outcome {
            Ok(o) => writeln!(w, "{head},{},{:e},{:e},{}", o.iters, o.final_l2, o.final_reta, o.termination)?,
            Err(e) => writeln!(w, "{head},,,,error: {}", e.replace([',', '\n'], ";"))?,
        }
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut w: W, summary: &[CellSummary]) -> Result<()> {
    writeln!(
        w,
        "ppw,contrast,rtol,method,runs,failed,converged,mean_iters,median_iters,min_iters,max_iters,mean_final_res_l2,ratio"
    )?;
    for s in summary {
        writeln!(
            w,
            "{},{},{:e},{},{},{},{},{},{},{},{},{:e},{}",
            fmt_opt(s.ppw),
            fmt_opt(s.contrast),
            s.rtol,
            s.method,
            s.runs,
            s.failed,
            s.converged,
            s.mean_iters,
            s.median_iters,
            s.min_iters,
            s.max_iters,
            s.mean_final_l2,
            fmt_opt(s.ratio)
        )?;
    }
    Ok(())
}

pub fn write_training_csv<W: Write>(mut w: W, training: &[TrainingRecord]) -> Result<()> {
    writeln!(w, "ppw,contrast,loss,steps,final_loss")?;
    for t in training {
        writeln!(w, "{},{},{},{},{:e}", fmt_opt(t.ppw), fmt_opt(t.contrast), t.loss.name(), t.steps, t.final_loss)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(family: &str, extra: &str) -> SweepConfig {
        let text = format!(
            "[sweep]\nfamily = {family}\nsamples = 2\ntrain_samples = 1\nmax_iters = 300\n{extra}\n\
             [train]\nepochs = 5\nbatch = 2\n[helmholtz]\nn = 16\nsponge_points = 2\n[cdr]\nn = 16\n[newton]\nn = 7\n"
        );
        SweepConfig::from_config(&Config::parse(&text).unwrap(), 3).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("gmres").is_err());
    }

    #[test]
    fn config_validation() {
        let bad = |t: &str| SweepConfig::from_config(&Config::parse(t).unwrap(), 0).is_err();
        assert!(bad("[sweep]\nsamples = 0\n"));
        assert!(bad("[sweep]\nmethods = cbs, cbs\n"));
        assert!(bad("[sweep]\nfamily = cdr\nppw = 10\n"));
        assert!(bad("[sweep]\nrtol = 0\n"));
        assert!(bad("[sweep]\nmethods = cbs, bicgstab\n"));
    }

    #[test]
    fn sweep_is_deterministic_and_complete() {
        let sweep = small("helmholtz", "methods = direct, cbs, npbs_bs_reta\nppw = 10, 8\nrtol = 1e-4, 1e-2");
        let a = run_sweep(&sweep, 5).unwrap();
        let b = run_sweep(&sweep, 5).unwrap();
        assert_eq!(a.runs, b.runs);
        assert_eq!(a.runs.len(), 2 * 2 * 3 * 2);
        assert_eq!(a.summary.len(), 2 * 2 * 3);
        assert!(a.summary.iter().all(|s| s.ratio.is_some()));
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_summary_csv(&mut csv_a, &a.summary).unwrap();
        write_summary_csv(&mut csv_b, &b.summary).unwrap();
        assert_eq!(csv_a, csv_b);
        // rows ordered by decreasing ppw
        assert_eq!(a.runs[0].ppw, Some(10.0));
    }

    #[test]
    fn dense_oracle_converges_in_one_step() {
        for fam in ["cdr", "newton"] {
            let sweep = small(fam, "methods = npbs_dense\nrtol = 1e-10");
            let res = run_sweep(&sweep, 1).unwrap();
            for r in &res.runs {
                let o = r.outcome.as_ref().unwrap();
                assert!(o.converged() && o.iters == 1, "{fam}: {o:?}");
            }
        }
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        // far too many unknowns for the dense oracle
        let text = "[sweep]\nfamily = cdr\nsamples = 1\nmethods = npbs_dense, cbs\nmax_iters = 5\n[cdr]\nn = 72\n";
        let sweep = SweepConfig::from_config(&Config::parse(text).unwrap(), 0).unwrap();
        let res = run_sweep(&sweep, 0).unwrap();
        let dense = res.runs.iter().find(|r| r.method == Method::NpbsDense).unwrap();
        assert!(dense.outcome.is_err());
        let cbs = res.runs.iter().find(|r| r.method == Method::Cbs).unwrap();
        assert!(cbs.outcome.is_ok());
        let s = res.summary.iter().find(|s| s.method == Method::NpbsDense).unwrap();
        assert_eq!((s.runs, s.failed), (1, 1));
        let mut out = Vec::new();
        write_runs_csv(&mut out, &res.runs).unwrap();
        assert!(String::from_utf8(out).unwrap().contains(",error: "));
    }
}
