//! Reading instance families and trainer settings out of a [`Config`].
//!
//! Every key is optional; missing keys fall back to the library defaults.
//!
//! ```text
//! [helmholtz]   n ppw contrast layers c_min curvature blend_cells
//!               sponge_points sponge_strength source_cells eta
//! [cdr]         n correlation_length kappa_mean log_kappa_std velocity
//!               sigma_mean sigma_std dealias
//! [newton]      n amplitude_min amplitude_max noise_std alpha
//! [train]       epochs batch step_size step_decay optimizer samples
//! ```

use anyhow::{Context, Result};
use bornprec::config::Config;
use bornprec::problems::{CdrFamily, Family, HelmholtzFamily, InstanceFamily, NewtonFamily};
use bornprec::train::{Optimizer, TrainConfig};

/// Seed streams split off the root seed of a command.
pub const TRAIN_STREAM: u64 = 0;
pub const TEST_STREAM: u64 = 1;
pub const PROBE_STREAM: u64 = 2;

pub fn helmholtz_family(cfg: &Config) -> Result<HelmholtzFamily> {
    let d = HelmholtzFamily::default();
    let s = "helmholtz";
    let mut medium = d.medium.clone();
    medium.contrast = cfg.get_or(s, "contrast", medium.contrast)?;
    medium.layers = cfg.get_or(s, "layers", medium.layers)?;
    medium.c_min = cfg.get_or(s, "c_min", medium.c_min)?;
    medium.curvature = cfg.get_or(s, "curvature", medium.curvature)?;
    medium.blend_cells = cfg.get_or(s, "blend_cells", medium.blend_cells)?;
    Ok(HelmholtzFamily {
        n: cfg.get_or(s, "n", d.n)?,
        medium,
        ppw: cfg.get_or(s, "ppw", d.ppw)?,
        sponge_points: cfg.get_or(s, "sponge_points", d.sponge_points)?,
        sponge_strength: cfg.get_or(s, "sponge_strength", d.sponge_strength)?,
        source_cells: cfg.get_or(s, "source_cells", d.source_cells)?,
        eta: cfg.get(s, "eta")?,
    })
}

pub fn cdr_family(cfg: &Config) -> Result<CdrFamily> {
    let d = CdrFamily::default();
    let s = "cdr";
    Ok(CdrFamily {
        n: cfg.get_or(s, "n", d.n)?,
        correlation_length: cfg.get_or(s, "correlation_length", d.correlation_length)?,
        kappa_mean: cfg.get_or(s, "kappa_mean", d.kappa_mean)?,
        log_kappa_std: cfg.get_or(s, "log_kappa_std", d.log_kappa_std)?,
        velocity: cfg.get_or(s, "velocity", d.velocity)?,
        sigma_mean: cfg.get_or(s, "sigma_mean", d.sigma_mean)?,
        sigma_std: cfg.get_or(s, "sigma_std", d.sigma_std)?,
        dealias: cfg.get_or(s, "dealias", d.dealias)?,
    })
}

pub fn newton_family(cfg: &Config) -> Result<NewtonFamily> {
    let d = NewtonFamily::default();
    let s = "newton";
    Ok(NewtonFamily {
        n: cfg.get_or(s, "n", d.n)?,
        amplitude: (cfg.get_or(s, "amplitude_min", d.amplitude.0)?, cfg.get_or(s, "amplitude_max", d.amplitude.1)?),
        noise_std: cfg.get_or(s, "noise_std", d.noise_std)?,
        alpha: cfg.get_or(s, "alpha", d.alpha)?,
    })
}

pub fn instance_family(cfg: &Config, family: Family) -> Result<InstanceFamily> {
    Ok(match family {
        Family::Helmholtz => InstanceFamily::Helmholtz(helmholtz_family(cfg)?),
        Family::Cdr => InstanceFamily::Cdr(cdr_family(cfg)?),
        Family::Newton => InstanceFamily::Newton(newton_family(cfg)?),
    })
}

/// Trainer settings plus the number of training instances.
pub fn train_settings(cfg: &Config, seed: u64) -> Result<(TrainConfig, usize)> {
    let d = TrainConfig::default();
    let s = "train";
    let optimizer = match cfg.raw(s, "optimizer") {
        Some(name) => Optimizer::parse(name)?,
        None => d.optimizer,
    };
    let tc = TrainConfig {
        epochs: cfg.get_or(s, "epochs", d.epochs)?,
        batch: cfg.get_or(s, "batch", d.batch)?,
        step_size: cfg.get_or(s, "step_size", d.step_size)?,
        step_decay: cfg.get_or(s, "step_decay", d.step_decay)?,
        seed,
        optimizer,
    };
    tc.validate().context("invalid [train] section")?;
    Ok((tc, cfg.get_or(s, "samples", 4usize)?))
}
