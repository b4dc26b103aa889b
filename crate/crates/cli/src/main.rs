//! Command-line pipeline: simulate a click stream, build the extraction
//! table, run table-driven extraction, and reproduce the efficiency curve,
//! waiting-time histogram, and statistical test report.
//!
//! Exit codes: 0 on success, 1 when a statistical test fails, 2 for
//! usage, configuration, or I/O problems.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use qrng_core::analysis::{self, SymbolDist};
use qrng_core::bits::unpack_bits;
use qrng_core::control::{self, FeedbackConfig};
use qrng_core::files;
use qrng_core::lut::{self, ExtractionTable};
use qrng_core::pipeline::{self, FilterConfig};
use qrng_core::source::{self, DetectorModel, SourceConfig};

#[derive(Parser)]
#[command(
    name = "qrng",
    version,
    about = "Click-stream RNG simulation, extraction, and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a detector click stream and write a time-tag file.
    Simulate(SimulateArgs),
    /// Precompute the extraction table and write it to disk.
    BuildTable(BuildTableArgs),
    /// Run the full extraction pipeline on a tag or symbol file.
    Extract(ExtractArgs),
    /// Write the analytic efficiency curve as CSV.
    Efficiency(EfficiencyArgs),
    /// Histogram the waiting times of a tag file and fit the exponential.
    Histogram(HistogramArgs),
    /// Run the statistical battery on a packed bit file.
    Test(TestArgs),
    /// Simulate the count-rate feedback loop and write its trace.
    Feedback(FeedbackArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Mean photon arrival rate, clicks per second.
    #[arg(long, default_value_t = 1.2e6)]
    rate: f64,
    /// Simulated span in seconds.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long)]
    seed: u64,
    /// Detector recovery time constant in nanoseconds (0 disables).
    #[arg(long, default_value_t = 40.0)]
    dead_tau_ns: f64,
    /// Span of visible waiting-time deviation in nanoseconds.
    #[arg(long, default_value_t = 160.0)]
    affected_window_ns: f64,
    /// Dark count rate, clicks per second.
    #[arg(long, default_value_t = 200.0)]
    dark_rate: f64,
    #[arg(long)]
    out: PathBuf,
    /// Output form: bin (8-byte little-endian ticks) or text (one per line).
    #[arg(long, default_value = "bin")]
    format: TagFormat,
}

#[derive(Clone, clap::ValueEnum)]
enum TagFormat {
    Bin,
    Text,
}

#[derive(Args)]
struct BuildTableArgs {
    #[arg(long)]
    out: PathBuf,
    /// Write the bare 2 MiB payload with no header, as a memory chip holds it.
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
struct ExtractArgs {
    /// Time-tag file (or symbol file with --input-kind symbols).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tags")]
    input_kind: InputKind,
    /// Extraction table written by build-table.
    #[arg(long)]
    table: PathBuf,
    /// Reject intervals shorter than this many clock ticks.
    #[arg(long, default_value_t = 10)]
    cutoff_ticks: u64,
    /// Packed output bit file; metadata goes to <out>.json.
    #[arg(long)]
    out: PathBuf,
    /// Also write the intermediate symbol stream (one byte per symbol).
    #[arg(long)]
    symbols_out: Option<PathBuf>,
    /// Pack the symbol stream four-per-byte instead.
    #[arg(long)]
    packed_symbols: bool,
}

#[derive(Clone, clap::ValueEnum)]
enum InputKind {
    Tags,
    Symbols,
}

#[derive(Args)]
struct EfficiencyArgs {
    /// Alphabet sizes to trace.
    #[arg(long, value_delimiter = ',', default_values_t = [2u32, 4, 8, 16])]
    alphabets: Vec<u32>,
    #[arg(long, default_value_t = 40)]
    max_buffer_bits: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HistogramArgs {
    /// Time-tag file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    bin_width_ticks: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TestArgs {
    /// Packed bit file.
    #[arg(long)]
    input: PathBuf,
    /// Exact number of bits to test; defaults to the <input>.json sidecar's
    /// count, then to the whole file.
    #[arg(long)]
    bit_count: Option<u64>,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Optional CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeedbackArgs {
    #[arg(long, default_value_t = 1.2e6)]
    target_rate: f64,
    #[arg(long, default_value_t = 16.0)]
    time_constant: f64,
    #[arg(long, default_value_t = 1.0)]
    update_period: f64,
    /// Plant gain, clicks per second per unit drive current.
    #[arg(long, default_value_t = 1.2e6)]
    k_led: f64,
    #[arg(long, default_value_t = 240.0)]
    duration: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Scale the plant gain by this factor from --step-time on.
    #[arg(long, default_value_t = 1.0)]
    step_factor: f64,
    #[arg(long, default_value_t = 0.0)]
    step_time: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct SimulateMeta {
    command: &'static str,
    seed: u64,
    mean_rate: f64,
    dark_rate: f64,
    duration_s: f64,
    recovery_tau_ns: f64,
    affected_window_ns: f64,
    clock_period_ns: f64,
    clicks: usize,
    observed_rate_per_s: f64,
}

#[derive(Serialize)]
struct ExtractMeta {
    command: &'static str,
    input: String,
    table: String,
    cutoff_ticks: u64,
    clicks_in: u64,
    intervals: u64,
    kept_samples: u64,
    symbols: u64,
    words: u64,
    residue_symbols: u64,
    bits_out: u64,
    bits_per_click: f64,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::BuildTable(args) => cmd_build_table(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Efficiency(args) => cmd_efficiency(args),
        Command::Histogram(args) => cmd_histogram(args),
        Command::Test(args) => cmd_test(args),
        Command::Feedback(args) => cmd_feedback(args),
    }
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    out.with_file_name(name)
}

fn write_meta<T: Serialize>(out: &Path, meta: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(meta)?;
    files::write_atomic(&meta_path(out), json.as_bytes())?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let cfg = SourceConfig {
        mean_rate: args.rate,
        duration: args.duration,
        dark_rate: args.dark_rate,
        rng_seed: args.seed,
    };
    let model = DetectorModel {
        recovery_tau_ns: args.dead_tau_ns,
        affected_window_ns: args.affected_window_ns,
    };
    let stream = source::simulate(&cfg, &model)?;
    match args.format {
        TagFormat::Bin => files::write_tags_bin(&args.out, &stream)?,
        TagFormat::Text => files::write_tags_text(&args.out, &stream)?,
    }
    let meta = SimulateMeta {
        command: "simulate",
        seed: args.seed,
        mean_rate: args.rate,
        dark_rate: args.dark_rate,
        duration_s: args.duration,
        recovery_tau_ns: args.dead_tau_ns,
        affected_window_ns: args.affected_window_ns,
        clock_period_ns: source::CLOCK_PERIOD_NS,
        clicks: stream.len(),
        observed_rate_per_s: if args.duration > 0.0 {
            stream.len() as f64 / args.duration
        } else {
            0.0
        },
    };
    write_meta(&args.out, &meta)?;
    println!(
        "wrote {} tags ({:.4e} clicks/s) to {}",
        stream.len(),
        meta.observed_rate_per_s,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_build_table(args: BuildTableArgs) -> Result<ExitCode> {
    let table = ExtractionTable::build();
    if args.raw {
        table.write_raw(&args.out)?;
    } else {
        table.write(&args.out)?;
    }
    let payload = table.payload();
    let checksum = Sha256::digest(&payload);
    println!(
        "table written to {} (payload {} bytes, sha256 {})",
        args.out.display(),
        payload.len(),
        hex_string(&checksum)
    );
    Ok(ExitCode::SUCCESS)
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_extract(args: ExtractArgs) -> Result<ExitCode> {
    let table = ExtractionTable::read(&args.table)?;
    let filter = FilterConfig {
        cutoff_ticks: args.cutoff_ticks,
    };

    let (clicks_in, n_intervals, symbols) = match args.input_kind {
        InputKind::Tags => {
            let stream = files::read_tags_bin(&args.input)?;
            let ivs = pipeline::intervals(&stream);
            let kept = pipeline::filter_intervals(&ivs, &filter);
            let symbols = pipeline::map_symbols(&kept, args.cutoff_ticks);
            (stream.len() as u64, ivs.len() as u64, symbols)
        }
        InputKind::Symbols => {
            let symbols = files::read_symbols(&args.input)?;
            let n = symbols.len() as u64;
            (0, n, symbols)
        }
    };
    let kept_samples = symbols.len() as u64;

    if let Some(path) = &args.symbols_out {
        if args.packed_symbols {
            files::write_symbols_packed(path, &symbols)?;
        } else {
            files::write_symbols(path, &symbols)?;
        }
    }

    let (bits, residue) = lut::extract_stream(&symbols, &table);
    files::write_bits(&args.out, &bits.bytes)?;

    let meta = ExtractMeta {
        command: "extract",
        input: args.input.display().to_string(),
        table: args.table.display().to_string(),
        cutoff_ticks: args.cutoff_ticks,
        clicks_in,
        intervals: n_intervals,
        kept_samples,
        symbols: kept_samples,
        words: kept_samples / lut::WORD_LEN as u64,
        residue_symbols: residue.len() as u64,
        bits_out: bits.bit_count,
        bits_per_click: if clicks_in > 0 {
            bits.bit_count as f64 / clicks_in as f64
        } else {
            0.0
        },
    };
    write_meta(&args.out, &meta)?;
    println!(
        "extracted {} bits from {} symbols ({} words, {} residue symbols)",
        bits.bit_count,
        kept_samples,
        meta.words,
        residue.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_efficiency(args: EfficiencyArgs) -> Result<ExitCode> {
    let points = analysis::efficiency_curve(&args.alphabets, args.max_buffer_bits)?;
    files::write_atomic(&args.out, analysis::efficiency_csv(&points).as_bytes())?;
    let device = analysis::efficiency(4, 10, &SymbolDist::Uniform)?;
    println!(
        "{} curve points written to {}; M=4, b=20 operating point: {:.6} bits/symbol",
        points.len(),
        args.out.display(),
        device.bits_per_symbol
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_histogram(args: HistogramArgs) -> Result<ExitCode> {
    let stream = files::read_tags_bin(&args.input)?;
    let ivs = pipeline::intervals(&stream);
    let fit = analysis::waiting_time_histogram(&ivs, args.bin_width_ticks)?;
    files::write_atomic(&args.out, fit.csv().as_bytes())?;
    println!(
        "fitted rate {:.4e}/s, deviation boundary {:.0} ns, {} bins -> {}",
        fit.fitted_rate,
        fit.deviation_boundary_ns,
        fit.counts.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_test(args: TestArgs) -> Result<ExitCode> {
    let bytes = files::read_bits(&args.input)?;
    let bit_count = match args.bit_count {
        Some(n) => n,
        None => sidecar_bit_count(&args.input).unwrap_or(bytes.len() as u64 * 8),
    };
    anyhow::ensure!(
        bit_count <= bytes.len() as u64 * 8,
        "bit count {bit_count} exceeds file size"
    );
    let bits = unpack_bits(&bytes, bit_count);
    let report = analysis::randomness_battery(&bits, args.alpha)?;
    for r in &report.results {
        println!(
            "{:<16} statistic {:>14.4}  p {:>12.6e}  {}",
            r.name,
            r.statistic,
            r.p_value,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    if let Some(out) = &args.out {
        files::write_atomic(out, report.csv().as_bytes())?;
    }
    if report.all_pass() {
        println!(
            "all {} tests pass at alpha = {}",
            report.results.len(),
            report.alpha
        );
        Ok(ExitCode::SUCCESS)
    } else {
        println!("statistical failure at alpha = {}", report.alpha);
        Ok(ExitCode::from(1))
    }
}

fn sidecar_bit_count(input: &Path) -> Option<u64> {
    let text = std::fs::read_to_string(meta_path(input)).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    value.get("bits_out")?.as_u64()
}

fn cmd_feedback(args: FeedbackArgs) -> Result<ExitCode> {
    let cfg = FeedbackConfig {
        target_rate: args.target_rate,
        time_constant: args.time_constant,
        update_period: args.update_period,
        k_led: args.k_led,
    };
    let mut rng = source::rng_for_stage(args.seed, 3);
    let step_time = args.step_time;
    let step_factor = args.step_factor;
    let trace = control::simulate_loop(
        &cfg,
        0.0,
        args.duration,
        |t| if t >= step_time { step_factor } else { 1.0 },
        Some(&mut rng),
    )?;
    files::write_atomic(&args.out, control::trace_csv(&trace).as_bytes())?;
    let last = trace.last().context("empty trace")?;
    println!(
        "{} samples -> {}; final measured rate {:.4e}/s",
        trace.len(),
        args.out.display(),
        last.measured_rate
    );
    Ok(ExitCode::SUCCESS)
}
