//! The w-statistic: ranked amplitudes of the elementwise product of a
//! normalized sample pair, parameterized by the erf model. The fitted
//! {w0, dw} pair is the two-parameter significance criterion; its null bands
//! come from a seeded parametric bootstrap against the i.i.d. Gaussian null,
//! since no closed-form threshold exists.

use crate::error::{Error, Result};
use crate::fit::{fit_erf, ErfFitResult};
use crate::rng::CounterRng;
use crate::series::{cdf_points, normalize, rank, Direction, RankedSeries, Series};
use crate::synth::gaussian;

/// Ranked product statistic with its erf fit.
#[derive(Debug, Clone, PartialEq)]
pub struct WStatistic {
    pub ranked: RankedSeries,
    pub fit: ErfFitResult,
    pub pair_label: String,
}

/// Parameter-difference criterion between two w-statistics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WCriterion {
    pub delta_w0: f64,
    pub delta_dw: f64,
    pub significant: bool,
    pub band_w0: f64,
    pub band_dw: f64,
}

/// Bootstrap null bands for the fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WBands {
    pub band_w0: f64,
    pub band_dw: f64,
    pub median_w0: f64,
    pub median_dw: f64,
    pub draws: usize,
    pub quantile: f64,
    pub low_confidence: bool,
}

/// Ranked sqrt(x_k * y_k) over a normalized pair, ascending.
pub fn product_sra(x: &Series, y: &Series) -> Result<RankedSeries> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    for (i, &v) in x.values().iter().chain(y.values()).enumerate() {
        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(Error::NotNormalized {
                index: i % x.len(),
                value: v,
            });
        }
    }
    let w: Vec<f64> = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(&a, &b)| (a.clamp(0.0, 1.0) * b.clamp(0.0, 1.0)).sqrt())
        .collect();
    Ok(rank(&Series::new(w)?, Direction::Ascending))
}

/// Normalize a raw pair, build the product statistic and fit it.
pub fn w_statistic(x_raw: &Series, y_raw: &Series, pair_label: &str) -> Result<WStatistic> {
    if x_raw.len() != y_raw.len() {
        return Err(Error::LengthMismatch {
            left: x_raw.len(),
            right: y_raw.len(),
        });
    }
    if x_raw.len() < 64 {
        return Err(Error::TooShort {
            needed: 64,
            got: x_raw.len(),
        });
    }
    let ranked = product_sra(&normalize(x_raw)?, &normalize(y_raw)?)?;
    let fit = fit_erf(&cdf_points(&ranked)?)?;
    Ok(WStatistic {
        ranked,
        fit,
        pair_label: pair_label.to_string(),
    })
}

/// Compare two fitted w-statistics against the provided bands.
pub fn compare_w(a: &WStatistic, b: &WStatistic, bands: &WBands) -> Result<WCriterion> {
    if !a.fit.converged || !b.fit.converged {
        return Err(Error::UnconvergedFit);
    }
    let delta_w0 = a.fit.model.w0() - b.fit.model.w0();
    let delta_dw = a.fit.model.dw() - b.fit.model.dw();
    Ok(WCriterion {
        delta_w0,
        delta_dw,
        significant: delta_w0.abs() > bands.band_w0 || delta_dw.abs() > bands.band_dw,
        band_w0: bands.band_w0,
        band_dw: bands.band_dw,
    })
}

/// Parametric bootstrap of the fitted parameters under the i.i.d. Gaussian
/// null: `draws` independent pairs of length `n`, each fitted, and the
/// `quantile` absolute deviation about the ensemble median reported per
/// parameter. Fully deterministic for a fixed master seed (per-draw seeds
/// are derived from it).
pub fn bootstrap_bands(n: usize, draws: usize, quantile: f64, seed: u64) -> Result<WBands> {
    if draws < 2 {
        return Err(Error::InvalidConfig {
            reason: format!("bootstrap needs at least 2 draws, got {draws}"),
        });
    }
    if !(quantile > 0.5 && quantile < 1.0) {
        return Err(Error::InvalidConfig {
            reason: format!("bootstrap quantile must lie in (0.5, 1), got {quantile}"),
        });
    }
    let mut w0s = Vec::with_capacity(draws);
    let mut dws = Vec::with_capacity(draws);
    for i in 0..draws {
        let sx = CounterRng::child_seed(seed, 2 * i as u64);
        let sy = CounterRng::child_seed(seed, 2 * i as u64 + 1);
        let stat = w_statistic(&gaussian(n, sx)?, &gaussian(n, sy)?, "bootstrap")?;
        w0s.push(stat.fit.model.w0());
        dws.push(stat.fit.model.dw());
    }
    let median_w0 = median(&mut w0s.clone());
    let median_dw = median(&mut dws.clone());
    let band_w0 = abs_deviation_quantile(&w0s, median_w0, quantile);
    let band_dw = abs_deviation_quantile(&dws, median_dw, quantile);
    Ok(WBands {
        band_w0,
        band_dw,
        median_w0,
        median_dw,
        draws,
        quantile,
        low_confidence: draws < 100,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Empirical quantile (nearest-rank on the sorted absolute deviations).
fn abs_deviation_quantile(values: &[f64], center: f64, quantile: f64) -> f64 {
    let mut devs: Vec<f64> = values.iter().map(|v| (v - center).abs()).collect();
    devs.sort_by(|a, b| a.total_cmp(b));
    let rank = ((quantile * devs.len() as f64).ceil() as usize).clamp(1, devs.len());
    devs[rank - 1]
}
