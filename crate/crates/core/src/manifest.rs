//! Run manifests: what produced a run directory and how to produce it again.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::KitConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Full command line, program name excluded.
    pub args: Vec<String>,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub config: KitConfig,
    /// Files written by the run, relative to the run directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: Vec<String>, config: KitConfig) -> Self {
        let started_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            args,
            seed: config.env.seed,
            started_at,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("rollout", vec!["rollout".into()], KitConfig::default().with_seed(4));
        m.outputs.push("report.json".into());
        m.write(dir.path()).unwrap();
        let back = RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.seed, 4);
    }
}
