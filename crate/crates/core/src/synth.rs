//! Deterministic synthetic sources: a clean Gaussian null and three defect
//! injections (local regression, duplicated halves, slow drift), plus a
//! uniform quantizer for studying discretization artifacts.
//!
//! Every generator is a pure function of (parameters, seed) with
//! platform-independent output; see [`crate::rng`] for the generator and the
//! committed reference words.

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::series::Series;

/// Source family selector for the CLI and config surfaces.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SourceKind {
    Gaussian,
    Ar1 { rho: f64 },
    DuplicateHalves { jitter: f64 },
    SinusoidDrift { amplitude: f64, period: f64 },
}

/// A fully specified synthetic stream.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SourceSpec {
    #[serde(flatten)]
    pub kind: SourceKind,
    pub n: usize,
    pub seed: u64,
}

impl SourceSpec {
    pub fn generate(&self) -> Result<Series> {
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(Error::InvalidConfig {
                reason: format!("source length must be even and >= 4, got {}", self.n),
            });
        }
        match self.kind {
            SourceKind::Gaussian => gaussian(self.n, self.seed),
            SourceKind::Ar1 { rho } => ar1(self.n, rho, self.seed),
            SourceKind::DuplicateHalves { jitter } => duplicate_halves(self.n, jitter, self.seed),
            SourceKind::SinusoidDrift { amplitude, period } => {
                sinusoid_drift(self.n, amplitude, period, self.seed)
            }
        }
    }
}

/// i.i.d. standard normal draws.
pub fn gaussian(n: usize, seed: u64) -> Result<Series> {
    let mut rng = CounterRng::new(seed);
    Series::new((0..n).map(|_| rng.next_normal()).collect())
}

/// Stationary unit-variance AR(1): x_{k+1} = rho x_k + sqrt(1-rho^2) g_k.
/// With rho = 0 the output equals `gaussian` with the same seed, elementwise.
pub fn ar1(n: usize, rho: f64, seed: u64) -> Result<Series> {
    if rho.is_nan() || rho.abs() >= 1.0 {
        return Err(Error::InvalidRho { rho });
    }
    let mut rng = CounterRng::new(seed);
    let scale = (1.0 - rho * rho).sqrt();
    let mut values = Vec::with_capacity(n);
    let mut prev = rng.next_normal();
    values.push(prev);
    for _ in 1..n {
        let g = rng.next_normal();
        // rho = 0 must reproduce the raw draws bit-for-bit.
        let x = if rho == 0.0 { g } else { rho * prev + scale * g };
        values.push(x);
        prev = x;
    }
    Series::new(values)
}

/// First half i.i.d. Gaussian, second half a jittered copy of the first.
pub fn duplicate_halves(n: usize, jitter: f64, seed: u64) -> Result<Series> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddLength { len: n });
    }
    if jitter < 0.0 {
        return Err(Error::InvalidConfig {
            reason: format!("jitter must be >= 0, got {jitter}"),
        });
    }
    let mut rng = CounterRng::new(seed);
    let half: Vec<f64> = (0..n / 2).map(|_| rng.next_normal()).collect();
    let mut values = half.clone();
    if jitter == 0.0 {
        values.extend_from_slice(&half);
    } else {
        values.extend(half.iter().map(|&x| x + jitter * rng.next_normal()));
    }
    Series::new(values)
}

/// Gaussian plus a slow sinusoid: x_k = g_k + amplitude sin(2 pi k / period),
/// k = 1..n.
pub fn sinusoid_drift(n: usize, amplitude: f64, period: f64, seed: u64) -> Result<Series> {
    if period.is_nan() || period < 2.0 {
        return Err(Error::InvalidPeriod { period });
    }
    let mut rng = CounterRng::new(seed);
    let omega = 2.0 * std::f64::consts::PI / period;
    Series::new(
        (1..=n)
            .map(|k| {
                let g = rng.next_normal();
                if amplitude == 0.0 {
                    g
                } else {
                    g + amplitude * (omega * k as f64).sin()
                }
            })
            .collect(),
    )
}

/// Uniform quantization of the data range [min, max] onto 2^bits levels with
/// both endpoints on the grid, so requantizing at the same depth is an exact
/// fixed point.
pub fn quantize(s: &Series, bits: u32) -> Result<Series> {
    if !(2..=24).contains(&bits) {
        return Err(Error::InvalidBitDepth { bits });
    }
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in s.values() {
        min = min.min(v);
        max = max.max(v);
    }
    if max == min {
        return Err(Error::DegenerateSeries { value: min });
    }
    let levels = (1u64 << bits) as f64 - 1.0;
    let range = max - min;
    let values = s
        .values()
        .iter()
        .map(|&v| {
            let k = ((v - min) / range * levels).round().min(levels).max(0.0);
            if k == levels {
                max
            } else {
                min + k * (range / levels)
            }
        })
        .collect();
    Series::new(values)
}
