use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use bornprec::config::Config;

pub const MANIFEST_NAME: &str = "run.manifest";

/// Provenance record written into every output directory. The timestamp lives here
/// and nowhere else, so CSV outputs stay byte-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config_path: Option<&Path>, seed: u64, out_dir: &Path) -> Self {
        Self {
            command: command.into(),
            config_path: config_path.map(Path::to_path_buf),
            seed,
            out_dir: out_dir.to_path_buf(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn to_config(&self) -> Config {
        let mut c = Config::new();
        c.set("run", "command", &self.command);
        c.set("run", "config", self.config_path.as_ref().map_or(String::new(), |p| p.display().to_string()));
        c.set("run", "seed", self.seed);
        c.set("run", "out", self.out_dir.display());
        c.set("run", "version", &self.version);
        c.set("run", "timestamp", self.timestamp);
        c
    }

    /// Creates the output directory if needed and writes the manifest into it.
    pub fn write(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        let path = self.out_dir.join(MANIFEST_NAME);
        std::fs::write(&path, self.to_config().to_string()).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let c = Config::load(path.as_ref())?;
        let config: String = c.get_or("run", "config", String::new())?;
        Ok(Self {
            command: c.require("run", "command")?,
            config_path: (!config.is_empty()).then(|| PathBuf::from(config)),
            seed: c.require("run", "seed")?,
            out_dir: PathBuf::from(c.require::<String>("run", "out")?),
            version: c.require("run", "version")?,
            timestamp: c.require("run", "timestamp")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("bp-manifest-{}", std::process::id()));
        let m = RunManifest::new("bench", Some(Path::new("sweep.cfg")), 42, &dir);
        let path = m.write().unwrap();
        assert_eq!(RunManifest::read(&path).unwrap(), m);
        let bare = RunManifest { config_path: None, ..m };
        bare.write().unwrap();
        assert_eq!(RunManifest::read(&path).unwrap(), bare);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
