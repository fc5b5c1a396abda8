use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bornprec::config::Config;
use bornprec::correction::{CorrectionMap, DenseExact, FourierDiag, ScalarMetric};
use bornprec::fields::{write_complex_csv, write_field_file, FieldData, RngState};
use bornprec::iterate::{run, write_trace_csv, Format, IterationConfig, IterationTrace};
use bornprec::problems::{load_manifest, save_manifest, Family};
use bornprec::train::{write_training_log, LossKind};
use num_complex::Complex64;

use crate::bench::{run_sweep, write_runs_csv, write_summary_csv, write_training_csv, SweepConfig, SweepResult};
use crate::manifest::RunManifest;
use crate::settings::{instance_family, train_settings, TEST_STREAM};
use crate::training::train_on_family;
use crate::verify::{run_suite, Report, Suite};

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Common {
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Common {
    pub fn config(&self) -> Result<Config> {
        match &self.config_path {
            Some(p) => Config::load(p).with_context(|| format!("reading config {}", p.display())),
            None => Ok(Config::new()),
        }
    }

    fn start(&self, command: &str) -> Result<()> {
        RunManifest::new(command, self.config_path.as_deref(), self.seed, &self.out).write()?;
        Ok(())
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }
}

pub fn verify(common: &Common, suites: &[Suite]) -> Result<Vec<Report>> {
    common.start(&format!("verify {}", suites.iter().map(|s| s.name()).collect::<Vec<_>>().join(" ")))?;
    let cfg = common.config()?;
    let mut reports = Vec::new();
    for &suite in suites {
        let report = run_suite(suite, &cfg, common.seed).with_context(|| format!("suite {}", suite.name()))?;
        report.print();
        report.write_csv(common.create(&format!("verify_{}.csv", suite.name()))?)?;
        reports.push(report);
    }
    Ok(reports)
}

/// How `solve` picks its correction map.
#[derive(Debug, Clone, PartialEq)]
pub enum MapChoice {
    Optimal(ScalarMetric),
    Fixed(Complex64),
    File(PathBuf),
    Dense,
}

pub fn parse_gamma(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().with_context(|| format!("bad gamma component {t:?}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => bail!("gamma must be RE or RE,IM"),
    }
}

pub fn solve(
    common: &Common,
    manifest: &Path,
    format: Format,
    choice: &MapChoice,
    rtol: f64,
    max_iters: usize,
) -> Result<IterationTrace> {
    common.start(&format!("solve {}", manifest.display()))?;
    let inst = load_manifest(manifest).with_context(|| format!("loading {}", manifest.display()))?;
    let p = inst.problem.as_split();
    let map = match choice {
        MapChoice::Optimal(m) => CorrectionMap::OptimalScalar(*m),
        MapChoice::Fixed(g) => CorrectionMap::Scalar(*g),
        MapChoice::File(path) => CorrectionMap::FourierDiag(
            FourierDiag::load(path, p.grid()).with_context(|| format!("loading map {}", path.display()))?,
        ),
        MapChoice::Dense => CorrectionMap::DenseExact(DenseExact::inverse_of_born(p)?),
    };
    let config = IterationConfig::new(format, rtol, max_iters)?;
    let (u, trace) = run(p, &map, &inst.source, &config, None)?;
    write_trace_csv(common.create("trace.csv")?, &trace)?;
    write_field_file(common.out.join("solution.bpfd"), &FieldData::Complex(u.clone()))?;
    write_complex_csv(common.create("solution.csv")?, &u)?;
    println!(
        "{} with {}: {} iterations, final relative residual {:.3e} ({})",
        format.name(),
        map.label(),
        trace.iters,
        trace.final_l2(),
        trace.terminated.name()
    );
    Ok(trace)
}

/// Writes `count` held-out instances of `family` as manifests named `<family>_<k>`.
pub fn generate(common: &Common, family: Family, count: usize) -> Result<Vec<PathBuf>> {
    common.start(&format!("generate {family} {count}"))?;
    let fam = instance_family(&common.config()?, family)?;
    let stream = RngState::new(common.seed).split(TEST_STREAM);
    let mut paths = Vec::new();
    for k in 0..count {
        let inst = fam.instance(&stream, k as u64)?;
        let path = save_manifest(&common.out, &format!("{family}_{k:03}"), &inst)?;
        println!("{}", path.display());
        paths.push(path);
    }
    Ok(paths)
}

pub fn train(common: &Common, family: Family, loss: LossKind) -> Result<(PathBuf, f64)> {
    common.start(&format!("train {family} {}", loss.name()))?;
    let cfg = common.config()?;
    let fam = instance_family(&cfg, family)?;
    let (tc, samples) = train_settings(&cfg, common.seed)?;
    let result = train_on_family(loss, &fam, &RngState::new(common.seed), &tc, samples)?;
    let stem = format!("{family}_{}", loss.name());
    write_training_log(common.create(&format!("train_{stem}.csv"))?, &result.log)?;
    let map_path = common.out.join(format!("map_{stem}.bpfd"));
    result.map.save(&map_path)?;
    let loss_value = result.final_loss();
    println!(
        "{stem}: {} steps, final mean squared relative residual {loss_value:.4e}, map {}",
        result.log.len().saturating_sub(1),
        map_path.display()
    );
    Ok((map_path, loss_value))
}

pub fn bench(common: &Common) -> Result<SweepResult> {
    if common.config_path.is_none() {
        bail!("bench needs a sweep config (--config PATH)");
    }
    common.start("bench")?;
    let sweep = SweepConfig::from_config(&common.config()?, common.seed)?;
    let result = run_sweep(&sweep, common.seed)?;
    write_runs_csv(common.create("runs.csv")?, &result.runs)?;
    write_summary_csv(common.create("summary.csv")?, &result.summary)?;
    write_training_csv(common.create("training.csv")?, &result.training)?;
    println!("{:>6} {:>8} {:>9} {:<14} {:>9} {:>10} {:>8}", "ppw", "contrast", "rtol", "method", "converged", "mean_iters", "ratio");
    for s in &result.summary {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:>6} {:>8} {:>9.1e} {:<14} {:>5}/{:<3} {:>10.2} {:>8}",
            opt(s.ppw),
            opt(s.contrast),
            s.rtol,
            s.method.name(),
            s.converged,
            s.runs,
            s.mean_iters,
            opt(s.ratio)
        );
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(result)
}
