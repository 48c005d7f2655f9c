use std::path::Path;

use serde::{Deserialize, Serialize};

/// Regression target for the value head.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueTarget {
    /// `A_t + V(s_t)`: the GAE return.
    #[default]
    Return,
    /// `A_t` alone, i.e. the loss `Σ (A_t − V(s_t))²`.
    LiteralAdvantage,
}

/// Training hyperparameters. Missing keys in a config file take the
/// defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub beta_value: f64,
    pub beta_entropy: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub episodes_per_update: usize,
    pub updates_per_epoch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub value_target: ValueTarget,
    /// Standardise advantages across each update's steps.
    pub normalize_advantages: bool,
    /// Fill the `wall_ms` log column; with `false` it is always 0 and the
    /// whole log is reproducible byte for byte.
    pub log_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.999,
            lambda: 0.85,
            beta_value: 1.0,
            beta_entropy: 0.001,
            lr: 0.008,
            beta1: 0.9,
            beta2: 0.999,
            episodes_per_update: 8,
            updates_per_epoch: 25,
            epochs: 10,
            seed: 0,
            value_target: ValueTarget::Return,
            normalize_advantages: false,
            log_wall_time: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid TOML config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl TrainConfig {
    pub fn total_updates(&self) -> usize {
        self.epochs * self.updates_per_epoch
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.gamma) || !unit(self.lambda) {
            return Err(ConfigError::Invalid(
                "gamma and lambda must lie in [0, 1]".into(),
            ));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(ConfigError::Invalid("lr must be positive".into()));
        }
        if !unit(self.beta1) || !unit(self.beta2) || self.beta1 == 1.0 || self.beta2 == 1.0 {
            return Err(ConfigError::Invalid(
                "beta1 and beta2 must lie in [0, 1)".into(),
            ));
        }
        if self.episodes_per_update == 0 {
            return Err(ConfigError::Invalid(
                "episodes_per_update must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        let c: TrainConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml(s: &str) -> Result<Self, ConfigError> {
        let c: TrainConfig = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a `.toml` file as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(&text),
            _ => Self::from_json(&text),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_keys_take_defaults() {
        let c = TrainConfig::from_json(r#"{"epochs": 2, "seed": 5}"#).unwrap();
        assert_eq!(c.epochs, 2);
        assert_eq!(c.seed, 5);
        assert_eq!(c.gamma, 0.999);
        assert_eq!(c.lambda, 0.85);
        let t =
            TrainConfig::from_toml("lr = 0.01\nvalue_target = \"literal_advantage\"\n").unwrap();
        assert_eq!(t.lr, 0.01);
        assert_eq!(t.value_target, ValueTarget::LiteralAdvantage);
        assert_eq!(t.episodes_per_update, 8);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(TrainConfig::from_json(r#"{"gamma": 1.5}"#).is_err());
        assert!(TrainConfig::from_json(r#"{"lr": 0}"#).is_err());
        assert!(TrainConfig::from_json(r#"{"gama": 0.9}"#).is_err());
    }
}
