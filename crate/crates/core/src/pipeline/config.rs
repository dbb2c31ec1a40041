//! Analysis configuration and its file representation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tunable thresholds of the analysis pipeline. The config file is JSON with
/// exactly these fields; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Pearson alarm factor c: either pair criterion above c/N alarms.
    pub pearson_factor: f64,
    /// Bootstrap draws behind the w-parameter null bands.
    pub bootstrap_draws: usize,
    /// Quantile of the bootstrap absolute-deviation bands.
    pub bootstrap_quantile: f64,
    /// Pass threshold of the bit tests. Fixed at 0.01; overriding it is
    /// permitted but flagged in the report.
    pub nist_alpha: f64,
    /// Samples per chunk in monitor mode (even, >= 2048).
    pub chunk_size: usize,
    /// Consecutive failing chunks before an alarm event.
    pub consecutive_alarms: usize,
    /// Master seed for every seeded procedure (bootstrap draws).
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            pearson_factor: 10.0,
            bootstrap_draws: 200,
            bootstrap_quantile: 0.99,
            nist_alpha: 0.01,
            chunk_size: 65_536,
            consecutive_alarms: 3,
            seed: 42,
        }
    }
}

impl AnalysisConfig {
    /// Check invariants; returns soft warnings (currently only the
    /// nist_alpha override).
    pub fn validate(&self) -> Result<Vec<String>> {
        let fail = |reason: String| -> Result<Vec<String>> {
            Err(Error::InvalidConfig { reason })
        };
        if self.pearson_factor.is_nan() || self.pearson_factor <= 0.0 {
            return fail(format!("pearson_factor must be positive, got {}", self.pearson_factor));
        }
        if self.bootstrap_draws < 2 {
            return fail(format!("bootstrap_draws must be >= 2, got {}", self.bootstrap_draws));
        }
        if !(self.bootstrap_quantile > 0.5 && self.bootstrap_quantile < 1.0) {
            return fail(format!(
                "bootstrap_quantile must lie in (0.5, 1), got {}",
                self.bootstrap_quantile
            ));
        }
        if !(self.nist_alpha > 0.0 && self.nist_alpha < 1.0) {
            return fail(format!("nist_alpha must lie in (0, 1), got {}", self.nist_alpha));
        }
        if self.chunk_size < 2048 || !self.chunk_size.is_multiple_of(2) {
            return fail(format!(
                "chunk_size must be even and >= 2048, got {}",
                self.chunk_size
            ));
        }
        if self.consecutive_alarms == 0 {
            return fail("consecutive_alarms must be positive".to_string());
        }
        let mut warnings = Vec::new();
        if self.nist_alpha != 0.01 {
            warnings.push(format!(
                "nist_alpha overridden to {} (standard pass rule is p > 0.01)",
                self.nist_alpha
            ));
        }
        Ok(warnings)
    }

    /// Parse a JSON config file; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
