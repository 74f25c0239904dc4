use std::fmt;
use std::path::Path;
use std::str::FromStr;

use expbench_core::scoring::{ScoringConfig, Weights};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const DEFAULT_MAX_ATTEMPTS: usize = 5;
pub const WORKERS_ENV: &str = "EXPBENCH_WORKERS";

/// Expected output shape of an extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Experiment,
    CompositionList,
    PropertyList,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Experiment => "experiment",
            Mode::CompositionList => "composition_list",
            Mode::PropertyList => "property_list",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "experiment" => Ok(Mode::Experiment),
            "composition_list" => Ok(Mode::CompositionList),
            "property_list" => Ok(Mode::PropertyList),
            _ => Err(format!(
                "unknown mode `{s}` (expected experiment, composition_list or property_list)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub max_attempts: usize,
    pub workers: Option<usize>,
    pub scoring: ScoringConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            workers: None,
            scoring: ScoringConfig::default(),
        }
    }
}

impl HarnessConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: HarnessConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::parse(&crate::read(path)?)
    }

    pub fn check(&self) -> Result<(), HarnessError> {
        if self.max_attempts == 0 {
            return Err(HarnessError::Config(
                "max_attempts must be at least 1".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Config("workers must be at least 1".into()));
        }
        let s = &self.scoring;
        for (name, v) in [
            ("material_threshold", s.material_threshold),
            ("parent_credit", s.parent_credit),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(HarnessError::Config(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        s.weights
            .check()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Worker count: the environment variable wins over the config file, which
    /// wins over the machine's parallelism.
    pub fn worker_count(&self) -> Result<usize, HarnessError> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            return match v.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(HarnessError::Config(format!(
                    "{WORKERS_ENV} must be a positive integer, got `{v}`"
                ))),
            };
        }
        Ok(self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
    }
}

/// `a,b,c,d` in (measurements, process, materials, configurations) order.
pub fn parse_weights(s: &str) -> Result<Weights, HarnessError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            HarnessError::Config(format!(
                "weights must be four comma-separated numbers, got `{s}`"
            ))
        })?;
    let [m, p, a, c] = parts[..] else {
        return Err(HarnessError::Config(format!(
            "weights must be four comma-separated numbers, got `{s}`"
        )));
    };
    Weights::new(m, p, a, c).map_err(|e| HarnessError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let cfg = HarnessConfig::parse(
            r#"
max_attempts = 3
workers = 2

[scoring]
material_threshold = 0.4
parent_credit = 0.25
aggregation = "category_first"

[scoring.weights]
measurements = 0.4
process = 0.2
materials = 0.2
configurations = 0.2
"#,
        )
        .unwrap();
        assert_eq!(cfg.max_attempts, 3);
        assert_eq!(cfg.scoring.material_threshold, 0.4);
        assert_eq!(cfg.scoring.weights.materials, 0.2);
        assert_eq!(cfg.scoring.value_rel_tol, 1e-6);
    }

    #[test]
    fn empty_config_is_default() {
        assert_eq!(HarnessConfig::parse("").unwrap(), HarnessConfig::default());
    }

    #[test]
    fn bad_configs() {
        assert!(HarnessConfig::parse("max_attempts = 0").is_err());
        assert!(HarnessConfig::parse("colour = 1").is_err());
        assert!(HarnessConfig::parse(
            "[scoring.weights]\nmeasurements = 1\nprocess = 1\nmaterials = 0\nconfigurations = 0"
        )
        .is_err());
    }

    #[test]
    fn weights_flag() {
        assert_eq!(
            parse_weights("1,0,0,0").unwrap(),
            Weights::new(1.0, 0.0, 0.0, 0.0).unwrap()
        );
        assert!(parse_weights("1,0,0").is_err());
        assert!(parse_weights("0.5,0.5,0.5,0").is_err());
        assert!("json".parse::<Mode>().is_err());
    }
}
