//! `rcf` -- verify and monitor raw randomness streams.
//!
//! Exit codes: 0 = verdict pass, 1 = verdict warn/fail (or failing bit
//! tests / alarms), 2 = usage or I/O error.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rcf_core::pipeline::{
    analyze_with_artifacts, emit_report, ingest, monitor, read_bit_file, write_f64le,
    write_plot_files, AnalysisConfig, InputFormat, MonitorEvent,
};
use rcf_core::series::{cdf_points, normalize, rank, Direction};
use rcf_core::synth::{SourceKind, SourceSpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rcf", version, about = "Randomness verification via ranked-amplitude criteria")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Input file path.
    path: PathBuf,

    /// Sample encoding of the input.
    #[arg(long, default_value = "f64le")]
    format: String,

    /// JSON config file (AnalysisConfig fields; unknown keys rejected).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full criteria pipeline over one stream and report a verdict.
    Analyze {
        #[command(flatten)]
        input: InputArgs,

        /// Write plot-ready two-column curve files into this directory.
        #[arg(long)]
        plots: Option<PathBuf>,

        /// Write the full JSON report here (stdout shows a summary).
        #[arg(long)]
        json: Option<PathBuf>,
    },

    /// Analyze a stream chunk by chunk, raising alarms on consecutive
    /// failures. Reads from a file or stdin ("-"); emits JSON lines.
    Monitor {
        /// Input file path, or "-" for stdin.
        path: String,

        #[arg(long, default_value = "f64le")]
        format: String,

        #[arg(long)]
        config: Option<PathBuf>,

        /// Samples per chunk (even, >= 2048); overrides the config value.
        #[arg(long)]
        chunk_size: Option<usize>,
    },

    /// Generate a deterministic synthetic stream in f64le format.
    Synth {
        /// Source kind: gaussian | ar1 | duplicate-halves | sinusoid-drift.
        kind: String,

        #[arg(long)]
        n: usize,

        #[arg(long)]
        seed: u64,

        /// AR(1) coefficient (ar1 only).
        #[arg(long, default_value_t = 0.1)]
        rho: f64,

        /// Second-half jitter (duplicate-halves only).
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,

        /// Sinusoid amplitude (sinusoid-drift only).
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,

        /// Sinusoid period in samples (sinusoid-drift only).
        #[arg(long, default_value_t = 1000.0)]
        period: f64,

        /// Optionally quantize the generated stream to this bit depth.
        #[arg(long)]
        quantize_bits: Option<u32>,

        #[arg(long)]
        out: PathBuf,
    },

    /// Run the bit-test battery over a packed bit file.
    Nist {
        /// Packed bit file: 8-byte LE bit count, then MSB-first bytes.
        path: PathBuf,
    },

    /// Fit the erf model to a single series' ranked amplitudes.
    Fit {
        #[command(flatten)]
        input: InputArgs,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<AnalysisConfig> {
    match path {
        Some(p) => AnalysisConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(AnalysisConfig::default()),
    }
}

fn parse_format(s: &str) -> anyhow::Result<InputFormat> {
    Ok(s.parse::<InputFormat>()?)
}

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().cmd {
        Command::Analyze { input, plots, json } => {
            let format = parse_format(&input.format)?;
            let config = load_config(&input.config)?;
            for warning in config.validate()? {
                eprintln!("warning: {warning}");
            }
            let series = ingest(&input.path, format)
                .with_context(|| format!("reading {}", input.path.display()))?;
            let (mut report, artifacts) = analyze_with_artifacts(&series, &config)?;
            report.input_descriptor.source = input.path.display().to_string();

            if let Some(dir) = plots {
                write_plot_files(&artifacts, &dir)?;
            }
            if let Some(path) = &json {
                emit_report(&report, path)?;
            }

            println!("verdict: {}", report.verdict);
            let pc = &report.pair_criterion;
            println!(
                "pearson: r2_12 {:.4e}{} r2_34 {:.4e}{} (threshold {:.4e})",
                pc.criterion.r2_12,
                if pc.alarm_12 { " ALARM" } else { "" },
                pc.criterion.r2_34,
                if pc.alarm_34 { " ALARM" } else { "" },
                pc.threshold,
            );
            let w = &report.w_stats;
            println!(
                "w-criterion: delta_w0 {:+.4e} delta_dw {:+.4e} bands ({:.4e}, {:.4e}){}",
                w.criterion.delta_w0,
                w.criterion.delta_dw,
                w.criterion.band_w0,
                w.criterion.band_dw,
                if w.criterion.significant { " SIGNIFICANT" } else { "" },
            );
            for (label, battery) in [("1&2", &report.nist.pair_12), ("3&4", &report.nist.pair_34)] {
                let passed = battery.results.iter().filter(|r| r.passed).count();
                println!(
                    "bit tests {label}: {passed}/{} passed, {} skipped",
                    battery.results.len(),
                    battery.skipped.len(),
                );
            }
            for flag in &report.flags {
                println!("flag: {flag}");
            }
            Ok(ExitCode::from(report.verdict.exit_code() as u8))
        }

        Command::Monitor {
            path,
            format,
            config,
            chunk_size,
        } => {
            let format = parse_format(&format)?;
            let mut config = load_config(&config)?;
            if let Some(size) = chunk_size {
                config.chunk_size = size;
            }
            config.validate()?;
            let stdout = std::io::stdout();
            let emit = |event: &MonitorEvent| -> rcf_core::Result<()> {
                use std::io::Write;
                let mut lock = stdout.lock();
                serde_json::to_writer(&mut lock, event)?;
                writeln!(lock)?;
                Ok(())
            };
            let summary = if path == "-" {
                monitor(std::io::stdin().lock(), format, &config, emit)?
            } else {
                let file = std::fs::File::open(&path).with_context(|| format!("opening {path}"))?;
                monitor(std::io::BufReader::new(file), format, &config, emit)?
            };
            eprintln!(
                "monitored {} chunks: {} failed, {} errored, {} alarms",
                summary.chunks,
                summary.failed_chunks,
                summary.errored_chunks,
                summary.alarms.len(),
            );
            Ok(ExitCode::from(if summary.alarms.is_empty() { 0 } else { 1 }))
        }

        Command::Synth {
            kind,
            n,
            seed,
            rho,
            jitter,
            amplitude,
            period,
            quantize_bits,
            out,
        } => {
            let kind = match kind.as_str() {
                "gaussian" => SourceKind::Gaussian,
                "ar1" => SourceKind::Ar1 { rho },
                "duplicate-halves" => SourceKind::DuplicateHalves { jitter },
                "sinusoid-drift" => SourceKind::SinusoidDrift { amplitude, period },
                other => anyhow::bail!(
                    "unknown source kind {other:?} (gaussian, ar1, duplicate-halves, sinusoid-drift)"
                ),
            };
            let mut series = SourceSpec { kind, n, seed }.generate()?;
            if let Some(bits) = quantize_bits {
                series = rcf_core::synth::quantize(&series, bits)?;
            }
            write_f64le(&out, series.values())?;
            eprintln!("wrote {} samples to {}", series.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Nist { path } => {
            let bits = read_bit_file(&path).with_context(|| format!("reading {}", path.display()))?;
            let report = rcf_core::nist::run_battery(&bits, rcf_core::nist::DEFAULT_ALPHA);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::from(if report.all_passed { 0 } else { 1 }))
        }

        Command::Fit { input } => {
            let format = parse_format(&input.format)?;
            let series = ingest(&input.path, format)
                .with_context(|| format!("reading {}", input.path.display()))?;
            let ranked = rank(&normalize(&series)?, Direction::Ascending);
            let fit = rcf_core::fit::fit_erf(&cdf_points(&ranked)?)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
