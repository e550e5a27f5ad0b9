//! The JSON configuration document.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use semiflow_core::catalog::{DEFAULT_FUNCTIONALS, DEFAULT_PARTIALS};
use semiflow_core::codec::Mode;
use semiflow_core::engine::{Countdown, RunConfig};
use semiflow_core::Rational;

/// Environment variable that overrides `outputs.dir`.
pub const OUT_DIR_ENV: &str = "SEMIFLOW_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    /// Deepest level written to `flows.csv`; the full depth when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows_depth: Option<usize>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: PathBuf::from("out"), flows_depth: None }
    }
}

fn default_catalog() -> Vec<String> {
    DEFAULT_FUNCTIONALS.iter().map(|s| s.to_string()).collect()
}

fn default_partials() -> Vec<String> {
    DEFAULT_PARTIALS.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub depth: usize,
    pub delta: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    pub mode: Mode,
    #[serde(default = "default_catalog")]
    pub catalog: Vec<String>,
    #[serde(default = "default_partials")]
    pub partials: Vec<String>,
    #[serde(default)]
    pub countdown: Countdown,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: ConfigDocument = serde_json::from_str(text).context("malformed configuration")?;
        doc.run_config().validate().context("configuration rejected")?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            depth: self.depth,
            delta: self.delta.clone(),
            n0: self.n0,
            mode: self.mode,
            catalog: self.catalog.clone(),
            partials: self.partials.clone(),
            countdown: self.countdown,
            seed: self.seed,
        }
    }
}

/// Output directory: explicit flag, then the environment, then `fallback`.
pub fn resolve_out_dir(flag: Option<&Path>, fallback: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => fallback.to_path_buf(),
    }
}
