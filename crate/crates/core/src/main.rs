//! Command-line interface: staged training, checkpoint decoding, the theory
//! suite, metric sweeps, and default-config emission.
//!
//! Exit code is 0 only when no checker failed and no stage diverged.
//! Reports are byte-identical across runs with the same master seed;
//! wall-clock timings go to a `timing.csv` sidecar instead of the report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use sembridge::harness::checkpoint::Checkpoint;
use sembridge::harness::config::ExperimentConfig;
use sembridge::harness::report::{emit, EmitFormat, Report, Section};
use sembridge::harness::{run_staged_pipeline, run_theory_suite};
use sembridge::jscc::ChannelConfig;
use sembridge::rng::RngState;

#[derive(Parser)]
#[command(name = "sembridge", version, about = "Bridge-based semantic communication toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration (TOML); defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override; re-keys every derived stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Report formats (repeatable): csv, json, svg.
    #[arg(long, value_delimiter = ',', default_values_t = vec![String::from("csv"), String::from("json")])]
    format: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the staged training pipeline and emit its report + checkpoint.
    Train(CommonArgs),
    /// Decode held-out sources from a checkpoint.
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// Trained checkpoint path.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of transmissions to decode.
        #[arg(long, default_value_t = 64)]
        count: usize,
        /// Refinement steps for the decoder.
        #[arg(long, default_value_t = 10)]
        n_steps: usize,
        /// Channel SNR override in dB.
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Run every theory checker and emit the verdict table.
    Theory(CommonArgs),
    /// Run the SNR / bandwidth-ratio / refinement-depth sweeps.
    Sweep(CommonArgs),
    /// Write the default configuration.
    EmitConfig {
        /// Destination path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &CommonArgs) -> sembridge::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| sembridge::Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default_toy(),
    };
    if let Some(seed) = common.seed {
        cfg = cfg.with_master_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_formats(names: &[String]) -> sembridge::Result<Vec<EmitFormat>> {
    names.iter().map(|n| n.parse()).collect()
}

fn write_timing(dir: &Path, label: &str, seconds: f64) {
    let line = format!("label,seconds\n{label},{seconds:.3}\n");
    let _ = std::fs::create_dir_all(dir);
    let _ = std::fs::write(dir.join("timing.csv"), line);
}

fn finish(report: &Report, formats: &[EmitFormat], dir: &Path) -> sembridge::Result<i32> {
    let files = emit(report, formats, dir)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    for c in &report.checks {
        let status = match c.status {
            sembridge::harness::CheckStatus::Pass => "PASS",
            sembridge::harness::CheckStatus::Fail => "FAIL",
            sembridge::harness::CheckStatus::Info => "INFO",
        };
        println!("{status} {} (observed {})", c.name, c.observed);
    }
    Ok(if report.failed() { 1 } else { 0 })
}

fn run() -> sembridge::Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train(common) => {
            let cfg = load_config(&common)?;
            let formats = parse_formats(&common.format)?;
            let started = Instant::now();
            let (report, checkpoint) = run_staged_pipeline(&cfg)?;
            write_timing(&common.out, "train", started.elapsed().as_secs_f64());
            checkpoint.save(&common.out.join("checkpoint.json"))?;
            println!("wrote {}", common.out.join("checkpoint.json").display());
            finish(&report, &formats, &common.out)
        }
        Command::Theory(common) => {
            let cfg = load_config(&common)?;
            let formats = parse_formats(&common.format)?;
            let started = Instant::now();
            let report = run_theory_suite(&cfg)?;
            write_timing(&common.out, "theory", started.elapsed().as_secs_f64());
            finish(&report, &formats, &common.out)
        }
        Command::Sweep(common) => {
            let cfg = load_config(&common)?;
            let formats = parse_formats(&common.format)?;
            let started = Instant::now();
            let (full, _) = run_staged_pipeline(&cfg)?;
            // Keep only the sweep tables.
            let mut report = Report::new(cfg.seed, cfg.to_toml()?);
            for section in full.sections {
                if matches!(section.name.as_str(), "snr_sweep" | "nfe_sweep" | "cbr_sweep") {
                    report.section(section);
                }
            }
            write_timing(&common.out, "sweep", started.elapsed().as_secs_f64());
            finish(&report, &formats, &common.out)
        }
        Command::Sample {
            common,
            checkpoint,
            count,
            n_steps,
            snr_db,
        } => {
            let cfg = load_config(&common)?;
            let ckpt = Checkpoint::load(&checkpoint)?;
            let channel = ChannelConfig {
                snr_db: snr_db.unwrap_or(cfg.channel.snr_db),
                ..cfg.channel
            };
            let xs = cfg.dataset.sample(count)?;
            let mut rng = RngState::derive(cfg.seed, 9000);
            let decoded = sembridge::harness::theory::decode_with_checkpoint(
                &ckpt, &channel, &xs, n_steps, &mut rng,
            )?;
            let mut section = Section::new("samples", &["index", "mse", "source", "decoded", "seed"]);
            for (i, (x, xhat)) in decoded.iter().enumerate() {
                let mse = sembridge::vecmath::dist_sq(x, xhat) / x.len() as f64;
                let mut src = String::new();
                let mut dec = String::new();
                for v in x {
                    let _ = write!(src, "{v:.6};");
                }
                for v in xhat {
                    let _ = write!(dec, "{v:.6};");
                }
                section.push(vec![
                    i.into(),
                    mse.into(),
                    src.into(),
                    dec.into(),
                    cfg.seed.into(),
                ]);
            }
            let mut report = Report::new(cfg.seed, cfg.to_toml()?);
            report.section(section);
            let formats = parse_formats(&common.format)?;
            finish(&report, &formats, &common.out)
        }
        Command::EmitConfig { out } => {
            let text = ExperimentConfig::default_toy().to_toml()?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &text).map_err(|e| sembridge::Error::Io {
                        path: path.display().to_string(),
                        source: e,
                    })?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(0)
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            std::process::exit(2);
        }
    }
}
