//! Kit-wide TOML configuration, one section per subsystem.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::ControllerGains;
use crate::env::{EnvConfig, EpisodeConfig};
use crate::netproto::{ChannelModel, ServerConfig};
use crate::physics::PhysicsParams;
use crate::reward::RewardWeights;
use crate::rollout::RolloutConfig;
use crate::sim2real::{CollectConfig, EvalConfig, PseudoRealPlant, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: Box<toml::de::Error> },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("bad override `{0}`; expected section.key=value")]
    Override(String),
}

/// `[channel]`: the wire-path channel model plus an on/off switch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSection {
    pub enabled: bool,
    #[serde(flatten)]
    pub model: ChannelModel,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct KitConfig {
    pub physics: PhysicsParams,
    pub env: EpisodeConfig,
    pub rewards: RewardWeights,
    pub action: ControllerGains,
    pub channel: ChannelSection,
    pub training: TrainConfig,
    pub collect: CollectConfig,
    pub plant: PseudoRealPlant,
    pub eval: EvalConfig,
    pub server: ServerConfig,
    pub rollout: RolloutConfig,
}

impl KitConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: KitConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), source: Box::new(e) })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), source: e })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Optional file, then `section.key=value` overrides, then validation.
    pub fn layered(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError::Read { path: p.display().to_string(), source: e })?;
                Self::layered_str(&text, &p.display().to_string(), overrides)
            }
            None => Self::layered_str("", "<defaults>", overrides),
        }
    }

    pub fn layered_str(text: &str, origin: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let origin = origin.to_string();
        let parse = |t: &str| toml::from_str::<toml::Table>(t).map_err(|e| ConfigError::Parse { path: origin.clone(), source: Box::new(e) });
        let mut table = parse(text)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: KitConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| ConfigError::Parse { path: origin.clone(), source: Box::new(e) })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig { episode: self.env, physics: self.physics, rewards: self.rewards, controller: self.action }
    }

    /// Server settings with the channel section folded in.
    pub fn server_config(&self) -> ServerConfig {
        let mut s = self.server.clone();
        s.channel = self.channel.enabled.then_some(self.channel.model);
        s
    }

    /// Re-seed every seeded subsystem from one value.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.env.seed = seed;
        self.training.seed = seed;
        self.collect.seed = seed;
        self.eval.seed = seed;
        self.channel.model.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.env_config().validate().map_err(|e| invalid(&e))?;
        if !self.rewards.is_finite() {
            return Err(ConfigError::Invalid("reward weights must be finite".into()));
        }
        self.training.validate().map_err(|e| invalid(&e))?;
        self.collect.validate().map_err(|e| invalid(&e))?;
        self.plant.validate().map_err(|e| invalid(&e))?;
        self.channel.model.validate().map_err(|e| invalid(&e))?;
        self.server_config().validate().map_err(|e| invalid(&e))?;
        if self.rollout.window == 0 {
            return Err(ConfigError::Invalid("rollout window must be at least 1".into()));
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let bad = || ConfigError::Override(item.to_string());
    let (key, raw) = item.split_once('=').ok_or_else(bad)?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.len() < 2 || path.iter().any(|p| p.is_empty()) {
        return Err(bad());
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = table;
    for section in &path[..path.len() - 1] {
        node = node
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(bad)?;
    }
    node.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrips_through_toml() {
        let cfg = KitConfig::default();
        let text = cfg.to_toml_string();
        assert!(text.contains("[physics"));
        assert_eq!(KitConfig::from_toml_str(&text, "mem").unwrap(), cfg);
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let cfg = KitConfig::from_toml_str(
            "[env]\nmax_duration = 60.0\n\n[physics.robot]\nv_max = 120.0\n\n[channel]\nenabled = true\nloss_probability = 0.5\n",
            "mem",
        )
        .unwrap();
        assert_eq!(cfg.env.max_duration, 60.0);
        assert_eq!(cfg.physics.robot.v_max, 120.0);
        assert_eq!(cfg.physics.robot.axle_length, 7.5);
        assert_eq!(cfg.server_config().channel.unwrap().loss_probability, 0.5);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(matches!(KitConfig::from_toml_str("[env]\ncontrol_dt = -1.0\n", "mem"), Err(ConfigError::Invalid(_))));
        assert!(matches!(KitConfig::from_toml_str("[env\n", "mem"), Err(ConfigError::Parse { .. })));
        assert!(matches!(KitConfig::from_toml_str("[plant]\ngain_left = 0.0\n", "mem"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn overrides_beat_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kit.toml");
        std::fs::write(&path, "[rewards]\nmove_to_ball = 0.5\n[env]\nn_per_team = 2\n").unwrap();
        let sets = ["rewards.move_to_ball=0.25".to_string(), "rollout.agent=chase".to_string(), "physics.robot.v_max = 90".to_string()];
        let cfg = KitConfig::layered(Some(&path), &sets).unwrap();
        assert_eq!(cfg.rewards.move_to_ball, 0.25);
        assert_eq!(cfg.env.n_per_team, 2);
        assert_eq!(cfg.rollout.agent, crate::policy::AgentKind::Chase);
        assert_eq!(cfg.physics.robot.v_max, 90.0);
        assert!(matches!(KitConfig::layered(None, &["novalue".into()]), Err(ConfigError::Override(_))));
        assert!(matches!(KitConfig::layered(None, &["env.n_per_team=9".into()]), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn seed_propagates() {
        let cfg = KitConfig::default().with_seed(7);
        assert_eq!((cfg.env.seed, cfg.training.seed, cfg.collect.seed, cfg.eval.seed), (7, 7, 7, 7));
    }
}
