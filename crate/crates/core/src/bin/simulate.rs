use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wiretap_core::harness::{self, ExperimentConfig, ReportFormat};
use wiretap_core::metrics::{self, CapacityPair, EntropyBudget};
use wiretap_core::shaping::required_block_length;
use wiretap_core::{parallel, Error, Result};

/// Wiretap-channel secrecy simulator.
#[derive(Parser)]
#[command(name = "simulate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a built-in configuration.
    Preset {
        #[arg(value_enum)]
        name: PresetName,
        /// Override the trial count of every grid point.
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate a closed-form metric and print it as JSON.
    #[command(subcommand)]
    Metrics(MetricCommand),
}

#[derive(Args)]
struct OutputArgs {
    /// Master seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; inferred from the output extension when absent.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Table2,
    DosaBullets,
    NbkgSweep,
}

impl PresetName {
    fn as_str(self) -> &'static str {
        match self {
            PresetName::Table2 => "table2",
            PresetName::DosaBullets => "dosa-bullets",
            PresetName::NbkgSweep => "nbkg-sweep",
        }
    }
}

#[derive(Subcommand)]
enum MetricCommand {
    /// Key entropy over message entropy.
    Doa {
        #[arg(long)]
        key_bits: f64,
        #[arg(long)]
        message_bits: f64,
    },
    /// Secret-key capacity over channel capacity, or the NBKG estimate at an SNR.
    Dosa {
        #[arg(long, requires = "channel_capacity", conflicts_with = "snr_db")]
        key_capacity: Option<f64>,
        #[arg(long)]
        channel_capacity: Option<f64>,
        /// Legitimate SNR in dB for the high-SNR approximation.
        #[arg(long)]
        snr_db: Option<f64>,
        /// Also run a Monte Carlo estimate with this many samples.
        #[arg(long, requires = "snr_db")]
        samples: Option<usize>,
        #[arg(long, default_value_t = harness::config::DEFAULT_MASTER_SEED)]
        seed: u64,
    },
    /// Minimum block length for a security level and error floor.
    Blocklen {
        #[arg(long)]
        lambda: u32,
        #[arg(long)]
        error_floor: f64,
    },
    /// Per-bit min-entropy bound for an error floor.
    Minentropy {
        #[arg(long)]
        error_floor: f64,
    },
    /// Error floor needed for a target synchronous degree.
    RequiredFloor {
        #[arg(long)]
        dosa: f64,
    },
}

fn run_and_emit(mut cfg: ExperimentConfig, output: OutputArgs) -> Result<()> {
    if let Some(seed) = output.seed {
        cfg.master_seed = seed;
    }
    let rows = harness::run_experiment(&cfg)?;
    let path = output.out.or_else(|| cfg.output_path.clone());
    let format = match (output.format, &path) {
        (Some(Format::Csv), _) => ReportFormat::Csv,
        (Some(Format::Jsonl), _) => ReportFormat::JsonLines,
        (None, Some(p)) => ReportFormat::from_path(p),
        (None, None) => ReportFormat::Csv,
    };
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    match path {
        Some(p) => {
            harness::emit_report(&rows, &p, format)?;
            log::info!("wrote {} rows to {}", rows.len(), p.display());
        }
        None => {
            let stdout = std::io::stdout();
            harness::write_report(&rows, stdout.lock(), format).map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })?;
        }
    }
    if failed > 0 {
        log::warn!("{failed} grid point(s) failed; see the error column");
    }
    Ok(())
}

fn metric(cmd: MetricCommand) -> Result<serde_json::Value> {
    Ok(match cmd {
        MetricCommand::Doa {
            key_bits,
            message_bits,
        } => {
            let b = EntropyBudget::new(key_bits, message_bits)?;
            json!({ "doa": metrics::degree_of_approaching(&b) })
        }
        MetricCommand::Dosa {
            key_capacity,
            channel_capacity,
            snr_db,
            samples,
            seed,
        } => match (key_capacity, channel_capacity, snr_db) {
            (Some(k), Some(c), None) => {
                let pair = CapacityPair::new(k, c)?;
                json!({ "dosa": metrics::degree_of_synchronous_approaching(&pair) })
            }
            (None, None, Some(db)) => {
                let snr = 10f64.powf(db / 10.0);
                let approx = metrics::dosa_highsnr_approx(snr)?;
                let mut v = json!({ "snr_db": db, "dosa_highsnr_approx": approx.value, "low_snr": approx.low_snr });
                if let Some(n) = samples {
                    let est = metrics::estimate_dosa_montecarlo(snr, n, seed)?;
                    v["dosa_estimate"] = json!(est.value);
                    v["dosa_estimate_se"] = json!(est.std_error);
                }
                v
            }
            _ => {
                return Err(Error::Config {
                    field: "dosa".into(),
                    message: "give either --key-capacity with --channel-capacity, or --snr-db"
                        .into(),
                })
            }
        },
        MetricCommand::Blocklen {
            lambda,
            error_floor,
        } => {
            json!({ "block_length": required_block_length(lambda, error_floor)? })
        }
        MetricCommand::Minentropy { error_floor } => {
            json!({ "min_entropy_bound": metrics::min_entropy_bound(error_floor)? })
        }
        MetricCommand::RequiredFloor { dosa } => {
            json!({ "required_error_floor": metrics::required_error_floor(dosa)? })
        }
    })
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output } => run_and_emit(harness::load_config(&config)?, output),
        Command::Preset {
            name,
            trials,
            output,
        } => {
            let mut cfg = harness::preset(name.as_str())?;
            if let Some(t) = trials {
                cfg.grid.trial_count = vec![t];
            }
            cfg.validate()?;
            run_and_emit(cfg, output)
        }
        Command::Metrics(cmd) => {
            let v = metric(cmd)?;
            writeln!(std::io::stdout(), "{v}").map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    parallel::configure_from_env();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}
