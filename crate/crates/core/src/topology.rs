//! Topology subsamples and the Pearson pair criteria.
//!
//! A length-2N series is covered twice: by its front/back halves (pair 1&2,
//! sensitive to ultra-long correlations such as a repeated block) and by its
//! odd/even interleaves (pair 3&4, sensitive to local regression between
//! adjacent samples). The squared Pearson coefficient of each pair is the
//! alarm statistic; for an i.i.d. source both sit near 1/N.

use crate::error::{Error, Result};
use crate::series::Series;

/// The four same-size subsamples of a length-2N series.
#[derive(Debug, Clone)]
pub struct SubsampleQuad {
    pub s1: Series,
    pub s2: Series,
    pub s3: Series,
    pub s4: Series,
    pub source_length: usize,
}

/// Squared Pearson coefficients of the two pairs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PairCriterion {
    pub r2_12: f64,
    pub r2_34: f64,
    /// Subsample length N.
    pub n: usize,
}

/// Split a length-2N series into front half, back half, odd-index and
/// even-index subsamples (1-based index formulas: `s1[k] = x[k]`,
/// `s2[k] = x[k+N]`, `s3[k] = x[2k-1]`, `s4[k] = x[2k]`).
pub fn split_quad(s: &Series) -> Result<SubsampleQuad> {
    let len = s.len();
    if !len.is_multiple_of(2) {
        return Err(Error::OddLength { len });
    }
    if len < 4 {
        return Err(Error::TooShort { needed: 4, got: len });
    }
    let n = len / 2;
    let v = s.values();
    let make = |vals: Vec<f64>| Series::new(vals).expect("subsample values are finite");
    Ok(SubsampleQuad {
        s1: make(v[..n].to_vec()),
        s2: make(v[n..].to_vec()),
        s3: make(v.iter().step_by(2).copied().collect()),
        s4: make(v.iter().skip(1).step_by(2).copied().collect()),
        source_length: len,
    })
}

/// Squared Pearson correlation coefficient of two equal-length series.
///
/// Computed as cov^2 / (var_a * var_b), which returns exactly 1.0 when both
/// arguments are the same sequence.
pub fn pearson_r2(a: &Series, b: &Series) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len() as f64;
    let mean_a = a.values().iter().sum::<f64>() / n;
    let mean_b = b.values().iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 {
        return Err(Error::DegenerateSeries {
            value: a.values()[0],
        });
    }
    if var_b == 0.0 {
        return Err(Error::DegenerateSeries {
            value: b.values()[0],
        });
    }
    Ok(((cov * cov) / (var_a * var_b)).min(1.0))
}

/// Evaluate both pair criteria of a quad.
pub fn pair_criteria(q: &SubsampleQuad) -> Result<PairCriterion> {
    Ok(PairCriterion {
        r2_12: pearson_r2(&q.s1, &q.s2)?,
        r2_34: pearson_r2(&q.s3, &q.s4)?,
        n: q.source_length / 2,
    })
}
