//! Scenario configuration: RIS fleet shape, stochastic rates, economic
//! constants and the four named experiment presets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Value-iteration stopping threshold used when none is given.
pub const DEFAULT_VI_TOLERANCE: f64 = 1e-6;
/// Block return rate used by the presets when it is not swept.
pub const DEFAULT_LAMBDA_M: f64 = 0.5;
/// Block failure rate used by the presets when it is not swept.
pub const DEFAULT_MU_M: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("unknown preset `{0}` (expected scenario1..scenario4)")]
    UnknownPreset(String),
    #[error("cannot read config {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// One main RIS. Its backup mirrors the block count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisSpec {
    /// 1-based position in the fleet.
    pub index: usize,
    pub block_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticRates {
    /// Service request arrival rate.
    pub lambda_s: f64,
    /// Per-block service completion rate; a k-block service departs at k·mu_s.
    pub mu_s: f64,
    /// Return rate of each failed block.
    pub lambda_m: f64,
    /// Failure rate of each working block.
    pub mu_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Economics {
    pub income_q: f64,
    pub transmit_z: f64,
    /// Holding cost per occupied block per unit time.
    pub hold_c: f64,
    /// Penalty per block relocated to a backup RIS.
    pub penalty_eps: f64,
    /// Continuous-time discount rate.
    pub discount_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub risses: Vec<RisSpec>,
    pub max_blocks_k: u32,
    pub rates: StochasticRates,
    pub econ: Economics,
    pub vi_tolerance: f64,
}

/// On-disk JSON layout. Keys are flat and fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub risses: Vec<u32>,
    pub max_blocks_k: u32,
    pub lambda_s: f64,
    pub mu_s: f64,
    pub lambda_m: f64,
    pub mu_m: f64,
    pub income_q: f64,
    pub transmit_z: f64,
    pub hold_c: f64,
    pub penalty_eps: f64,
    pub discount_alpha: f64,
    pub vi_tolerance: f64,
}

impl From<&ScenarioConfig> for ConfigFile {
    fn from(cfg: &ScenarioConfig) -> Self {
        ConfigFile {
            risses: cfg.risses.iter().map(|r| r.block_count).collect(),
            max_blocks_k: cfg.max_blocks_k,
            lambda_s: cfg.rates.lambda_s,
            mu_s: cfg.rates.mu_s,
            lambda_m: cfg.rates.lambda_m,
            mu_m: cfg.rates.mu_m,
            income_q: cfg.econ.income_q,
            transmit_z: cfg.econ.transmit_z,
            hold_c: cfg.econ.hold_c,
            penalty_eps: cfg.econ.penalty_eps,
            discount_alpha: cfg.econ.discount_alpha,
            vi_tolerance: cfg.vi_tolerance,
        }
    }
}

impl From<ConfigFile> for ScenarioConfig {
    fn from(file: ConfigFile) -> Self {
        ScenarioConfig {
            risses: file
                .risses
                .iter()
                .enumerate()
                .map(|(pos, &block_count)| RisSpec {
                    index: pos + 1,
                    block_count,
                })
                .collect(),
            max_blocks_k: file.max_blocks_k,
            rates: StochasticRates {
                lambda_s: file.lambda_s,
                mu_s: file.mu_s,
                lambda_m: file.lambda_m,
                mu_m: file.mu_m,
            },
            econ: Economics {
                income_q: file.income_q,
                transmit_z: file.transmit_z,
                hold_c: file.hold_c,
                penalty_eps: file.penalty_eps,
                discount_alpha: file.discount_alpha,
            },
            vi_tolerance: file.vi_tolerance,
        }
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn check_nonnegative(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and >= 0, got {v}")))
    }
}

impl ScenarioConfig {
    /// A fleet with the given block counts and the economics shared by all
    /// presets.
    pub fn with_blocks(block_counts: &[u32], max_blocks_k: u32) -> Self {
        ScenarioConfig {
            risses: block_counts
                .iter()
                .enumerate()
                .map(|(pos, &block_count)| RisSpec {
                    index: pos + 1,
                    block_count,
                })
                .collect(),
            max_blocks_k,
            rates: StochasticRates {
                lambda_s: 1.0,
                mu_s: 5.0,
                lambda_m: DEFAULT_LAMBDA_M,
                mu_m: DEFAULT_MU_M,
            },
            econ: Economics {
                income_q: 150.0,
                transmit_z: 100.0,
                hold_c: 1.0,
                penalty_eps: 100.0,
                discount_alpha: 0.1,
            },
            vi_tolerance: DEFAULT_VI_TOLERANCE,
        }
    }

    /// Returns the config unchanged if every invariant holds.
    pub fn validate(self) -> Result<Self, ConfigError> {
        if self.risses.is_empty() {
            return Err(invalid("risses", "at least one RIS is required"));
        }
        for (pos, ris) in self.risses.iter().enumerate() {
            if ris.index != pos + 1 {
                return Err(invalid(
                    "risses",
                    format!("RIS at position {} has index {}", pos + 1, ris.index),
                ));
            }
            if ris.block_count == 0 {
                return Err(invalid(
                    "risses",
                    format!("RIS {} must have at least one block", ris.index),
                ));
            }
        }
        if self.max_blocks_k == 0 {
            return Err(invalid("max_blocks_k", "K must be at least 1"));
        }
        let min_blocks = self.risses.iter().map(|r| r.block_count).min().unwrap_or(0);
        if self.max_blocks_k > min_blocks {
            return Err(invalid(
                "max_blocks_k",
                format!(
                    "K exceeds min block count ({} > {min_blocks})",
                    self.max_blocks_k
                ),
            ));
        }
        check_positive("lambda_s", self.rates.lambda_s)?;
        check_positive("mu_s", self.rates.mu_s)?;
        check_nonnegative("lambda_m", self.rates.lambda_m)?;
        check_nonnegative("mu_m", self.rates.mu_m)?;
        check_nonnegative("income_q", self.econ.income_q)?;
        check_nonnegative("transmit_z", self.econ.transmit_z)?;
        check_nonnegative("hold_c", self.econ.hold_c)?;
        check_nonnegative("penalty_eps", self.econ.penalty_eps)?;
        check_positive("discount_alpha", self.econ.discount_alpha)?;
        check_positive("vi_tolerance", self.vi_tolerance)?;
        Ok(self)
    }

    pub fn num_ris(&self) -> usize {
        self.risses.len()
    }

    /// Block count N(i) of the RIS pair at 0-based position `ris`.
    pub fn block_count(&self, ris: usize) -> u32 {
        self.risses[ris].block_count
    }

    pub fn block_counts(&self) -> Vec<u32> {
        self.risses.iter().map(|r| r.block_count).collect()
    }

    pub fn total_blocks(&self) -> u32 {
        self.risses.iter().map(|r| r.block_count).sum()
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = serde_json::from_str(text)?;
        ScenarioConfig::from(file).validate()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ConfigFile::from(self)).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn with_lambda_s(mut self, lambda_s: f64) -> Self {
        self.rates.lambda_s = lambda_s;
        self
    }

    pub fn with_mu_m(mut self, mu_m: f64) -> Self {
        self.rates.mu_m = mu_m;
        self
    }

    pub fn with_lambda_m(mut self, lambda_m: f64) -> Self {
        self.rates.lambda_m = lambda_m;
        self
    }
}

/// The four experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Preset {
    /// One RIS of 5 blocks, single-block services.
    Scenario1,
    /// Two RISs of 5 blocks, single-block services.
    Scenario2,
    /// Three RISs of 5 blocks, up to two blocks per service.
    Scenario3,
    /// Three RISs of 4, 3 and 2 blocks, up to two blocks per service.
    Scenario4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Scenario1,
        Preset::Scenario2,
        Preset::Scenario3,
        Preset::Scenario4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Scenario1 => "scenario1",
            Preset::Scenario2 => "scenario2",
            Preset::Scenario3 => "scenario3",
            Preset::Scenario4 => "scenario4",
        }
    }

    /// Preset configuration with λ_s = 1 and the default failure rates.
    pub fn config(self) -> ScenarioConfig {
        match self {
            Preset::Scenario1 => ScenarioConfig::with_blocks(&[5], 1),
            Preset::Scenario2 => ScenarioConfig::with_blocks(&[5, 5], 1),
            Preset::Scenario3 => ScenarioConfig::with_blocks(&[5, 5, 5], 2),
            Preset::Scenario4 => ScenarioConfig::with_blocks(&[4, 3, 2], 2),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ConfigError::UnknownPreset(s.to_string()))
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    Ok(name.parse::<Preset>()?.config())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_above_min_block_count_is_rejected() {
        let err = ScenarioConfig::with_blocks(&[2], 3).validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("max_blocks_k"), "{msg}");
        assert!(msg.contains("K exceeds min block count"), "{msg}");
    }

    #[test]
    fn single_ris_single_block_is_valid() {
        let cfg = ScenarioConfig::with_blocks(&[5], 1);
        assert_eq!(cfg.clone().validate().unwrap(), cfg);
    }

    #[test]
    fn zero_discount_is_rejected() {
        let mut cfg = ScenarioConfig::with_blocks(&[5], 1);
        cfg.econ.discount_alpha = 0.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("discount_alpha"), "{msg}");
    }

    #[test]
    fn failure_free_limit_is_allowed() {
        let cfg = ScenarioConfig::with_blocks(&[3], 1)
            .with_mu_m(0.0)
            .with_lambda_m(0.0);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn negative_and_nan_rates_are_rejected() {
        let cfg = ScenarioConfig::with_blocks(&[3], 1).with_mu_m(-0.1);
        assert!(cfg.validate().is_err());
        let cfg = ScenarioConfig::with_blocks(&[3], 1).with_lambda_s(f64::NAN);
        assert!(cfg.validate().is_err());
        let cfg = ScenarioConfig::with_blocks(&[3], 1).with_lambda_s(0.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn empty_fleet_and_empty_ris_are_rejected() {
        let cfg = ScenarioConfig::with_blocks(&[], 1);
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Invalid {
                field: "risses",
                ..
            })
        ));
        let cfg = ScenarioConfig::with_blocks(&[3, 0], 1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn presets_match_published_fleets() {
        let s1 = preset("scenario1").unwrap();
        assert_eq!(s1.block_counts(), vec![5]);
        assert_eq!(s1.max_blocks_k, 1);
        let s2 = preset("scenario2").unwrap();
        assert_eq!(s2.block_counts(), vec![5, 5]);
        assert_eq!(s2.max_blocks_k, 1);
        let s3 = preset("scenario3").unwrap();
        assert_eq!(s3.block_counts(), vec![5, 5, 5]);
        assert_eq!(s3.max_blocks_k, 2);
        let s4 = preset("scenario4").unwrap();
        assert_eq!(s4.block_counts(), vec![4, 3, 2]);
        assert_eq!(s4.max_blocks_k, 2);
        for p in Preset::ALL {
            let cfg = p.config();
            assert_eq!(cfg.econ.income_q, 150.0);
            assert_eq!(cfg.econ.transmit_z, 100.0);
            assert_eq!(cfg.econ.hold_c, 1.0);
            assert_eq!(cfg.econ.penalty_eps, 100.0);
            assert_eq!(cfg.econ.discount_alpha, 0.1);
            assert_eq!(cfg.rates.mu_s, 5.0);
            assert!(cfg.validate().is_ok());
        }
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(matches!(
            preset("scenario5"),
            Err(ConfigError::UnknownPreset(_))
        ));
    }

    #[test]
    fn json_keys_are_flat_and_round_trip() {
        let cfg = Preset::Scenario4.config();
        let text = cfg.to_json_string();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let mut keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            vec![
                "discount_alpha",
                "hold_c",
                "income_q",
                "lambda_m",
                "lambda_s",
                "max_blocks_k",
                "mu_m",
                "mu_s",
                "penalty_eps",
                "risses",
                "transmit_z",
                "vi_tolerance"
            ]
        );
        assert_eq!(ScenarioConfig::from_json_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_json_key_is_rejected() {
        let mut value: serde_json::Value =
            serde_json::from_str(&Preset::Scenario1.config().to_json_string()).unwrap();
        value["extra"] = serde_json::json!(1);
        assert!(ScenarioConfig::from_json_str(&value.to_string()).is_err());
    }
}
