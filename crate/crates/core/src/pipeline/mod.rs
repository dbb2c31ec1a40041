//! End-to-end orchestration: ingest a raw stream, run every criterion, emit
//! a versioned report, and monitor chunked streams with an alarm counter.

pub mod config;
pub mod io;
pub mod report;

pub use config::AnalysisConfig;
pub use io::{ingest, read_bit_file, write_bit_file, write_f64le, ChunkReader, InputFormat};
pub use report::{
    emit_report, AngleReport, AngleSummary, FullReport, InputDescriptor, NistReport,
    PairCriterionReport, Verdict, WReport, WStatSummary, SCHEMA_VERSION,
};

use crate::angle;
use crate::error::{Error, Result};
use crate::fit::decimate;
use crate::nist;
use crate::series::{cdf_points, center, normalize, rank, CdfPoint, Direction, Series};
use crate::topology::{pair_criteria, split_quad};
use crate::wstat::{bootstrap_bands, compare_w, w_statistic, WBands};
use std::collections::HashMap;
use std::io::Read;
use std::sync::Mutex;

/// Minimum analyzable length.
pub const MIN_ANALYZE_LEN: usize = 2048;

/// 1% Kolmogorov band for the angle-uniformity deviation.
fn uniformity_band(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

type BandsKey = (usize, usize, u64, u64);

/// Null bands are a pure function of (n, draws, quantile, seed); cache them
/// per process since monitor mode re-derives the same bands for every chunk.
fn null_bands(n: usize, draws: usize, quantile: f64, seed: u64) -> Result<WBands> {
    static CACHE: Mutex<Option<HashMap<BandsKey, WBands>>> = Mutex::new(None);
    let key = (n, draws, quantile.to_bits(), seed);
    let mut guard = CACHE.lock().expect("bands cache poisoned");
    let cache = guard.get_or_insert_with(HashMap::new);
    if let Some(bands) = cache.get(&key) {
        return Ok(*bands);
    }
    let bands = bootstrap_bands(n, draws, quantile, seed)?;
    cache.insert(key, bands);
    Ok(bands)
}

/// Plot-ready curves from one analysis: decimated w-SRA point sets and the
/// ranked increment scatter per pair.
#[derive(Debug, Clone)]
pub struct PlotArtifacts {
    pub w_sra_12: Vec<CdfPoint>,
    pub w_sra_34: Vec<CdfPoint>,
    /// Ranked (r'_n, phi'_n) pairs, both coordinates ranked ascending.
    pub velocity_12: Vec<(f64, f64)>,
    pub velocity_34: Vec<(f64, f64)>,
}

struct PairAnalysis {
    angle: AngleSummary,
    battery: nist::BatteryReport,
    velocity: Vec<(f64, f64)>,
    degenerate_channels: Vec<&'static str>,
}

/// Placeholder for a channel whose increments are constant and therefore
/// cannot carry a fit; `converged == false` marks it unusable.
fn degenerate_fit() -> crate::fit::ErfFitResult {
    crate::fit::ErfFitResult {
        model: crate::fit::FittedModel::Base(crate::fit::ErfModel { w0: 0.0, dw: 1e-9 }),
        r2: 0.0,
        rss: 0.0,
        iterations: 0,
        converged: false,
    }
}

/// A fitted increment channel: the fit plus the ranked points it used.
type FittedChannel = (crate::fit::ErfFitResult, Vec<CdfPoint>);

/// Normalize, rank and fit one increment channel; None when the channel is
/// constant (a degenerate defect regime, handled by the caller).
fn fit_channel(values: Vec<f64>) -> Result<Option<FittedChannel>> {
    let series = Series::new(values)?;
    let normalized = match normalize(&series) {
        Ok(n) => n,
        Err(Error::DegenerateSeries { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let points = cdf_points(&rank(&normalized, Direction::Ascending))?;
    let fit = crate::fit::fit_erf(&points)?;
    Ok(Some((fit, points)))
}

fn analyze_pair(x: &Series, y: &Series, alpha: f64) -> Result<PairAnalysis> {
    let xc = center(x)?;
    let yc = center(y)?;
    let decomposition = angle::decompose(&xc, &yc)?;
    let triple = angle::split(&decomposition)?;
    // The battery assumes independent bits, so it consumes the
    // disjoint-increment stream (overlapping increments are serially
    // dependent by construction).
    let bits = angle::extract_independent_bits(&triple);
    let uniformity = angle::angle_uniformity(&decomposition.phi)?;
    let ones = if bits.bits.is_empty() {
        0.0
    } else {
        bits.bits.iter().map(|&b| b as f64).sum::<f64>() / bits.bits.len() as f64
    };
    let battery = nist::run_battery(&bits.bits, alpha);

    let signed_dphi: Vec<f64> = triple
        .signs
        .iter()
        .zip(&triple.abs_dphi)
        .map(|(&s, &a)| f64::from(s) * a)
        .collect();
    let mut degenerate_channels = Vec::new();
    let (dphi_fit, dphi_points) = match fit_channel(signed_dphi)? {
        Some((fit, points)) => (fit, points),
        None => {
            degenerate_channels.push("angle increment");
            (degenerate_fit(), Vec::new())
        }
    };
    let (dr_fit, dr_points) = match fit_channel(triple.dr.clone())? {
        Some((fit, points)) => (fit, points),
        None => {
            degenerate_channels.push("radius increment");
            (degenerate_fit(), Vec::new())
        }
    };
    let velocity: Vec<(f64, f64)> = decimate(&dr_points)
        .iter()
        .zip(decimate(&dphi_points).iter())
        .map(|(r, p)| (r.x, p.x))
        .collect();

    Ok(PairAnalysis {
        angle: AngleSummary {
            uniformity_deviation: uniformity,
            uniformity_band: uniformity_band(decomposition.phi.len()),
            zero_fraction: triple.zero_fraction,
            sign_zeros_dropped: bits.source_zeros_dropped,
            low_radius_dropped: decomposition.dropped,
            ones_fraction: ones,
            dphi_fit,
            dr_fit,
        },
        battery,
        velocity,
        degenerate_channels,
    })
}

/// Run the full criteria pipeline over one series.
pub fn analyze(series: &Series, config: &AnalysisConfig) -> Result<FullReport> {
    analyze_with_artifacts(series, config).map(|(report, _)| report)
}

/// As [`analyze`], additionally returning plot-ready curves.
pub fn analyze_with_artifacts(
    series: &Series,
    config: &AnalysisConfig,
) -> Result<(FullReport, PlotArtifacts)> {
    let mut flags = config.validate()?;

    let mut values = series.values();
    if !values.len().is_multiple_of(2) {
        values = &values[..values.len() - 1];
        flags.push("input truncated by one sample to even length".to_string());
    }
    if values.len() < MIN_ANALYZE_LEN {
        return Err(Error::TooShort {
            needed: MIN_ANALYZE_LEN,
            got: values.len(),
        });
    }
    let even = Series::new(values.to_vec())?;

    let quad = split_quad(&even)?;
    let criterion = pair_criteria(&quad)?;
    let threshold = config.pearson_factor / criterion.n as f64;
    let pair_report = PairCriterionReport {
        criterion,
        threshold,
        alarm_12: criterion.r2_12 > threshold,
        alarm_34: criterion.r2_34 > threshold,
    };

    let w12 = w_statistic(&quad.s1, &quad.s2, "1&2")?;
    let w34 = w_statistic(&quad.s3, &quad.s4, "3&4")?;
    let bands = null_bands(
        criterion.n,
        config.bootstrap_draws,
        config.bootstrap_quantile,
        config.seed,
    )?;
    let w_criterion = compare_w(&w12, &w34, &bands)?;
    if bands.low_confidence {
        flags.push(format!(
            "bootstrap bands from only {} draws (low confidence)",
            bands.draws
        ));
    }

    let pair12 = analyze_pair(&quad.s1, &quad.s2, config.nist_alpha)?;
    let pair34 = analyze_pair(&quad.s3, &quad.s4, config.nist_alpha)?;
    for (label, pair) in [("1&2", &pair12), ("3&4", &pair34)] {
        if pair.angle.zero_fraction > 0.0 {
            flags.push(format!(
                "pair {label}: {:.3e} zero angle increments (possible discretization)",
                pair.angle.zero_fraction
            ));
        }
        for channel in &pair.degenerate_channels {
            flags.push(format!("pair {label}: {channel} channel is constant"));
        }
    }

    let uniformity_soft = pair12.angle.uniformity_deviation > pair12.angle.uniformity_band
        || pair34.angle.uniformity_deviation > pair34.angle.uniformity_band;
    if uniformity_soft {
        flags.push("angle uniformity deviation beyond the 1% null band".to_string());
    }

    let hard_fail = pair_report.alarm_12
        || pair_report.alarm_34
        || w_criterion.significant
        || !pair12.battery.all_passed
        || !pair34.battery.all_passed;
    let soft = uniformity_soft || !flags.is_empty();
    let verdict = if hard_fail {
        Verdict::Fail
    } else if soft {
        Verdict::Warn
    } else {
        Verdict::Pass
    };

    let report = FullReport {
        schema_version: SCHEMA_VERSION.to_string(),
        input_descriptor: InputDescriptor {
            source: "<memory>".to_string(),
            n_samples: even.len(),
            fnv1a64: report::hash_samples(even.values()),
        },
        pair_criterion: pair_report,
        w_stats: WReport {
            pair_12: WStatSummary {
                pair_label: w12.pair_label.clone(),
                n: w12.ranked.values().len(),
                fit: w12.fit.clone(),
            },
            pair_34: WStatSummary {
                pair_label: w34.pair_label.clone(),
                n: w34.ranked.values().len(),
                fit: w34.fit.clone(),
            },
            bands,
            criterion: w_criterion,
        },
        angle: AngleReport {
            pair_12: pair12.angle,
            pair_34: pair34.angle,
        },
        nist: NistReport {
            pair_12: pair12.battery,
            pair_34: pair34.battery,
        },
        flags,
        verdict,
    };

    let artifacts = PlotArtifacts {
        w_sra_12: decimate(&cdf_points(&w12.ranked)?),
        w_sra_34: decimate(&cdf_points(&w34.ranked)?),
        velocity_12: pair12.velocity,
        velocity_34: pair34.velocity,
    };
    Ok((report, artifacts))
}

/// Write the plot artifacts as two-column text files into `dir`.
pub fn write_plot_files(artifacts: &PlotArtifacts, dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let write_points = |name: &str, pts: &[CdfPoint]| -> Result<()> {
        let mut out = String::with_capacity(pts.len() * 24);
        for p in pts {
            out.push_str(&format!("{:.12e} {:.12e}\n", p.x, p.z));
        }
        std::fs::write(dir.join(name), out)?;
        Ok(())
    };
    let write_pairs = |name: &str, pts: &[(f64, f64)]| -> Result<()> {
        let mut out = String::with_capacity(pts.len() * 24);
        for (a, b) in pts {
            out.push_str(&format!("{a:.12e} {b:.12e}\n"));
        }
        std::fs::write(dir.join(name), out)?;
        Ok(())
    };
    write_points("w_sra_12.dat", &artifacts.w_sra_12)?;
    write_points("w_sra_34.dat", &artifacts.w_sra_34)?;
    write_pairs("velocity_12.dat", &artifacts.velocity_12)?;
    write_pairs("velocity_34.dat", &artifacts.velocity_34)?;
    Ok(())
}

/// One monitored chunk: either an analysis outcome or a per-chunk error.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChunkRecord {
    pub index: usize,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
    pub report: Option<Box<FullReport>>,
}

/// Alarm raised after the configured number of consecutive failing chunks.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AlarmRecord {
    pub chunk_index: usize,
    pub consecutive_failures: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum MonitorEvent {
    Chunk(ChunkRecord),
    Alarm(AlarmRecord),
}

/// Monitor totals.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MonitorSummary {
    pub chunks: usize,
    pub failed_chunks: usize,
    pub errored_chunks: usize,
    pub alarms: Vec<AlarmRecord>,
}

/// Consume a stream in consecutive chunks, analyze each independently, and
/// raise an alarm after `consecutive_alarms` failing chunks in a row. An
/// errored chunk resets the counter. Chunk indices are 1-based; a trailing
/// partial chunk is discarded.
pub fn monitor<R: Read>(
    reader: R,
    format: InputFormat,
    config: &AnalysisConfig,
    mut on_event: impl FnMut(&MonitorEvent) -> Result<()>,
) -> Result<MonitorSummary> {
    config.validate()?;
    let mut chunks = ChunkReader::new(reader, format, config.chunk_size);
    let mut summary = MonitorSummary {
        chunks: 0,
        failed_chunks: 0,
        errored_chunks: 0,
        alarms: Vec::new(),
    };
    let mut consecutive = 0usize;
    let mut index = 0usize;
    while let Some(chunk) = chunks.next_chunk() {
        index += 1;
        summary.chunks = index;
        let outcome = chunk.and_then(|values| {
            let series = Series::new(values)?;
            analyze(&series, config)
        });
        let record = match outcome {
            Ok(mut report) => {
                report.input_descriptor.source = format!("<chunk {index}>");
                let verdict = report.verdict;
                if verdict == Verdict::Fail {
                    summary.failed_chunks += 1;
                    consecutive += 1;
                } else {
                    consecutive = 0;
                }
                ChunkRecord {
                    index,
                    verdict: Some(verdict),
                    error: None,
                    report: Some(Box::new(report)),
                }
            }
            Err(e) => {
                summary.errored_chunks += 1;
                consecutive = 0;
                ChunkRecord {
                    index,
                    verdict: None,
                    error: Some(e.to_string()),
                    report: None,
                }
            }
        };
        on_event(&MonitorEvent::Chunk(record))?;
        if consecutive == config.consecutive_alarms {
            let alarm = AlarmRecord {
                chunk_index: index,
                consecutive_failures: consecutive,
            };
            summary.alarms.push(alarm.clone());
            on_event(&MonitorEvent::Alarm(alarm))?;
        }
    }
    Ok(summary)
}
