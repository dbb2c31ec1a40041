//! Versioned, schema-stable report emitted by the analysis pipeline.
//!
//! Field names are pinned by `schema/report_v1.json` at the repository root;
//! a schema change requires bumping [`SCHEMA_VERSION`].

use crate::error::Result;
use crate::fit::ErfFitResult;
use crate::nist::BatteryReport;
use crate::topology::PairCriterion;
use crate::wstat::{WBands, WCriterion};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Version string stamped into every report.
pub const SCHEMA_VERSION: &str = "1";

/// What was analyzed: a caller-supplied source label plus a content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub source: String,
    pub n_samples: usize,
    /// FNV-1a 64 of the analyzed samples' little-endian bytes, hex.
    pub fnv1a64: String,
}

/// Pearson pair criteria with the c/N alarm threshold applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCriterionReport {
    #[serde(flatten)]
    pub criterion: PairCriterion,
    pub threshold: f64,
    pub alarm_12: bool,
    pub alarm_34: bool,
}

/// Compact fit view of one w-statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WStatSummary {
    pub pair_label: String,
    pub n: usize,
    pub fit: ErfFitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WReport {
    pub pair_12: WStatSummary,
    pub pair_34: WStatSummary,
    pub bands: WBands,
    pub criterion: WCriterion,
}

/// Angle-channel diagnostics for one subsample pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSummary {
    pub uniformity_deviation: f64,
    pub uniformity_band: f64,
    pub zero_fraction: f64,
    pub sign_zeros_dropped: usize,
    pub low_radius_dropped: usize,
    pub ones_fraction: f64,
    pub dphi_fit: ErfFitResult,
    pub dr_fit: ErfFitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub pair_12: AngleSummary,
    pub pair_34: AngleSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NistReport {
    pub pair_12: BatteryReport,
    pub pair_34: BatteryReport,
}

/// Overall outcome. Hard criteria (Pearson, w-significance, bit tests)
/// decide fail; soft flags alone give warn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl Verdict {
    /// CI contract: 0 = pass, 1 = warn/fail (distinguished in the report).
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Warn | Verdict::Fail => 1,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
        })
    }
}

/// The full analysis outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub schema_version: String,
    pub input_descriptor: InputDescriptor,
    pub pair_criterion: PairCriterionReport,
    pub w_stats: WReport,
    pub angle: AngleReport,
    pub nist: NistReport,
    pub flags: Vec<String>,
    pub verdict: Verdict,
}

impl FullReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Write the report as pretty JSON.
pub fn emit_report(report: &FullReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json_string()? + "\n")?;
    Ok(())
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub(crate) fn hash_samples(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    format!("{:016x}", fnv1a64(&bytes))
}
