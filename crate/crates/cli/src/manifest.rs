use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::settings::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Written next to every output so the run can be repeated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Files written by the run, relative to the manifest.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &RunConfig, outputs: Vec<String>) -> Self {
        Manifest {
            subcommand: cfg.subcommand().to_string(),
            config: cfg.to_json(),
            seed: cfg.seed(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs,
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| e.to_string())?;
        m.run_config()?;
        Ok(m)
    }

    /// The recorded configuration, checked against the recorded seed.
    pub fn run_config(&self) -> Result<RunConfig, String> {
        let cfg = RunConfig::from_json(&self.subcommand, self.config.clone())?;
        if cfg.seed() != self.seed {
            return Err(format!(
                "seed {} does not match the configuration seed {}",
                self.seed,
                cfg.seed()
            ));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Manifest {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    Manifest::parse(&text).map_err(|msg| CliError::Manifest {
        path: path.to_path_buf(),
        msg,
    })
}
