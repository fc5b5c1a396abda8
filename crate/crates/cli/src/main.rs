use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use bornprec::correction::ScalarMetric;
use bornprec::iterate::Format;
use bornprec::problems::Family;
use bornprec::train::LossKind;
use bp_cli::commands::{self, Common, MapChoice};
use bp_cli::verify::Suite;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bp", version, about = "Spectral preconditioned iterations: verify, solve, train, bench")]
struct Cli {
    /// Key-value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; every sample's randomness is split from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "bp_out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Helmholtz,
    Cdr,
    Newton,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Helmholtz => Family::Helmholtz,
            FamilyArg::Cdr => Family::Cdr,
            FamilyArg::Newton => Family::Newton,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LossArg {
    Dir,
    BsL2,
    BsReta,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Dir => LossKind::Dir,
            LossArg::BsL2 => LossKind::BsL2,
            LossArg::BsReta => LossKind::BsReta,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Direct,
    Cbs,
    Npbs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Euclidean,
    Reta,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run invariant suites; exits nonzero if any check fails.
    Verify {
        /// Suites to run (all by default).
        #[arg(value_enum)]
        suites: Vec<Suite>,
    },
    /// Iterate on one problem manifest.
    Solve {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "cbs")]
        format: FormatArg,
        /// Fourier-diagonal map file from `bp train`.
        #[arg(long, conflicts_with_all = ["gamma", "dense"])]
        map: Option<PathBuf>,
        /// Fixed relaxation `RE` or `RE,IM` instead of the per-step optimum.
        #[arg(long, conflicts_with = "dense")]
        gamma: Option<String>,
        /// Exact dense inverse of I − GV (small grids only).
        #[arg(long)]
        dense: bool,
        /// Metric of the per-step optimal scalar.
        #[arg(long, value_enum, default_value = "euclidean")]
        metric: MetricArg,
        #[arg(long, default_value_t = 1e-6)]
        rtol: f64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
    },
    /// Write seeded problem instances as manifests.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Train a Fourier-diagonal correction map.
    Train {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_enum)]
        loss: LossArg,
    },
    /// Run a benchmark sweep described by --config.
    Bench,
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("BP_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("BP_THREADS={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    init_threads()?;
    let common = Common { config_path: cli.config, seed: cli.seed, out: cli.out };
    match cli.command {
        Command::Verify { suites } => {
            let suites = if suites.is_empty() { Suite::ALL.to_vec() } else { suites };
            let reports = commands::verify(&common, &suites)?;
            let ok = reports.iter().all(|r| r.passed());
            println!("verify: {}", if ok { "all checks passed" } else { "FAILED" });
            Ok(ok)
        }
        Command::Solve { manifest, format, map, gamma, dense, metric, rtol, max_iters } => {
            let format = match format {
                FormatArg::Direct => Format::Direct,
                FormatArg::Cbs => Format::Cbs,
                FormatArg::Npbs => Format::Npbs,
            };
            let choice = match (map, gamma, dense) {
                (Some(path), _, _) => MapChoice::File(path),
                (_, Some(g), _) => MapChoice::Fixed(commands::parse_gamma(&g)?),
                (_, _, true) => MapChoice::Dense,
                _ => MapChoice::Optimal(match metric {
                    MetricArg::Euclidean => ScalarMetric::Euclidean,
                    MetricArg::Reta => ScalarMetric::REta,
                }),
            };
            commands::solve(&common, &manifest, format, &choice, rtol, max_iters)?;
            Ok(true)
        }
        Command::Generate { family, count } => {
            commands::generate(&common, family.into(), count)?;
            Ok(true)
        }
        Command::Train { family, loss } => {
            commands::train(&common, family.into(), loss.into())?;
            Ok(true)
        }
        Command::Bench => {
            commands::bench(&common)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
