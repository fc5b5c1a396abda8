//! Problem instances on disk: a key-value manifest plus binary field files next to it.
//!
//! ```text
//! [problem]
//! family = helmholtz
//! nx = 64
//! ny = 64
//! lx = 1
//! ly = 1
//! bc = periodic
//! k0_sq = 2310.5
//! eta = 1200.25
//!
//! [fields]
//! k2 = inst.k2.bpfd
//! source = inst.source.bpfd
//! ```
//!
//! Field paths are relative to the manifest's directory.

use std::path::{Path, PathBuf};

use super::{CdrCoefficients, CdrOptions, CdrProblem, Family, HelmholtzProblem, NewtonJacobianProblem, SplitProblem};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::fields::{read_field_file, write_field_file, ComplexField, FieldData, RealField};
use crate::spectral::{BoundaryCondition, GridSpec};

#[derive(Debug, Clone)]
pub enum AnyProblem {
    Helmholtz(HelmholtzProblem),
    Cdr(CdrProblem),
    Newton(NewtonJacobianProblem),
}

impl AnyProblem {
    pub fn as_split(&self) -> &dyn SplitProblem {
        match self {
            Self::Helmholtz(p) => p,
            Self::Cdr(p) => p,
            Self::Newton(p) => p,
        }
    }
}

/// A problem together with its right-hand side.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub problem: AnyProblem,
    pub source: ComplexField,
}

fn put_grid(cfg: &mut Config, g: &GridSpec) {
    cfg.set("problem", "nx", g.nx);
    cfg.set("problem", "ny", g.ny);
    cfg.set("problem", "lx", g.lx);
    cfg.set("problem", "ly", g.ly);
    cfg.set("problem", "bc", g.bc.name());
}

fn get_grid(cfg: &Config) -> Result<GridSpec> {
    let bc = BoundaryCondition::parse(&cfg.require::<String>("problem", "bc")?)?;
    GridSpec::new(
        cfg.require("problem", "nx")?,
        cfg.require("problem", "ny")?,
        cfg.require("problem", "lx")?,
        cfg.require("problem", "ly")?,
        bc,
    )
}

/// Writes `<dir>/<name>.manifest` and its field files; returns the manifest path.
pub fn save_manifest(dir: impl AsRef<Path>, name: &str, inst: &ProblemInstance) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut cfg = Config::new();
    let p = inst.problem.as_split();
    cfg.set("problem", "family", p.family().name());
    put_grid(&mut cfg, p.grid());
    let mut fields: Vec<(&str, FieldData)> = vec![("source", FieldData::Complex(inst.source.clone()))];
    match &inst.problem {
        AnyProblem::Helmholtz(h) => {
            cfg.set("problem", "k0_sq", h.k0_sq());
            cfg.set("problem", "eta", h.eta());
            fields.push(("k2", FieldData::Complex(h.k2().clone())));
        }
        AnyProblem::Cdr(c) => {
            cfg.set("problem", "kappa0", c.kappa0());
            cfg.set("problem", "v0x", c.v0().0);
            cfg.set("problem", "v0y", c.v0().1);
            cfg.set("problem", "sigma0", c.sigma0());
            cfg.set("problem", "dealias", c.dealias());
            let co = c.coefficients();
            fields.push(("kappa", FieldData::Real(co.kappa.clone())));
            fields.push(("vx", FieldData::Real(co.vx.clone())));
            fields.push(("vy", FieldData::Real(co.vy.clone())));
            fields.push(("sigma", FieldData::Real(co.sigma.clone())));
        }
        AnyProblem::Newton(n) => {
            cfg.set("problem", "alpha", n.alpha());
            fields.push(("u_current", FieldData::Real(n.u_current().clone())));
        }
    }
    for (key, data) in &fields {
        let file = format!("{name}.{key}.bpfd");
        write_field_file(dir.join(&file), data)?;
        cfg.set("fields", key, file);
    }
    let path = dir.join(format!("{name}.manifest"));
    std::fs::write(&path, cfg.to_string())?;
    Ok(path)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    let path = path.as_ref();
    let cfg = Config::load(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let grid = get_grid(&cfg)?;
    let field = |key: &str| -> Result<FieldData> {
        let file: String = cfg.require("fields", key)?;
        read_field_file(dir.join(file), &grid)
    };
    let real = |key: &str| -> Result<RealField> { field(key)?.into_real() };
    let source = field("source")?.into_complex();
    let family = Family::parse(&cfg.require::<String>("problem", "family")?)?;
    let problem = match family {
        Family::Helmholtz => AnyProblem::Helmholtz(HelmholtzProblem::new(
            field("k2")?.into_complex(),
            cfg.require("problem", "k0_sq")?,
            cfg.require("problem", "eta")?,
        )?),
        Family::Cdr => {
            let coeffs = CdrCoefficients { kappa: real("kappa")?, vx: real("vx")?, vy: real("vy")?, sigma: real("sigma")? };
            let opts = CdrOptions {
                kappa0: cfg.get("problem", "kappa0")?,
                v0: match (cfg.get("problem", "v0x")?, cfg.get("problem", "v0y")?) {
                    (Some(a), Some(b)) => Some((a, b)),
                    (None, None) => None,
                    _ => return Err(Error::Format("v0x and v0y must be given together".into())),
                },
                sigma0: cfg.get("problem", "sigma0")?,
                dealias: cfg.get_or("problem", "dealias", false)?,
            };
            AnyProblem::Cdr(CdrProblem::new(coeffs, opts)?)
        }
        Family::Newton => {
            AnyProblem::Newton(NewtonJacobianProblem::new(real("u_current")?, cfg.get_or("problem", "alpha", 0.0)?)?)
        }
    };
    Ok(ProblemInstance { problem, source })
}
