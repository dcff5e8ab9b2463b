use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use lcma::channel::{generate_spreading, SpreadingGenConfig};
use lcma::receiver::DetectorKind;
use lcma::sim::{
    format_csv, format_rate_csv, parse_snr_range, run_experiment, run_rate_sweep, ExperimentConfig, RateSweepConfig,
    ReceiverMode,
};
use lcma::LcmaError;

/// Lattice-code multiple access link simulator.
#[derive(Parser, Debug)]
#[command(name = "lcma", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an FER/BER sweep and write CSV.
    Sim(SimArgs),
    /// Sweep achievable symmetric rates of selected vs identity coefficients.
    Rates(RatesArgs),
    /// Generate a random spreading matrix with entries in {0, +1, -1}.
    GenSpreading(GenArgs),
}

#[derive(clap::Args, Debug)]
struct SimArgs {
    /// JSON experiment config; unknown keys are rejected. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ring size q (power of two or prime).
    #[arg(long)]
    q: Option<u64>,
    /// Number of users K.
    #[arg(long)]
    users: Option<usize>,
    /// Spreading length N_S.
    #[arg(long)]
    ns: Option<usize>,
    /// Receive antennas N_R.
    #[arg(long)]
    nr: Option<usize>,
    /// SNR grid in dB as a:b:step, or a single value.
    #[arg(long, value_name = "A:B:STEP")]
    snr: Option<String>,
    /// Trial cap per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    /// Stop an SNR point after this many frame errors.
    #[arg(long)]
    max_frame_errors: Option<u64>,
    /// Detector: lsd (list sphere decoder), exhaustive, or lf (linear filter).
    #[arg(long, value_parser = parse_detector)]
    detector: Option<DetectorKind>,
    /// Receiver: single (one stage) or multi (stages with cancellation).
    #[arg(long, value_parser = parse_receiver)]
    receiver: Option<ReceiverMode>,
    /// Candidate list size of the sphere decoder.
    #[arg(long)]
    list_size: Option<usize>,
    /// Regularization of the linear filter; defaults to the linear SNR.
    #[arg(long)]
    theta: Option<f64>,
    /// Ring code file (generator and parity-check).
    #[arg(long)]
    code_file: Option<PathBuf>,
    /// Spreading matrix file, one row per chip.
    #[arg(long)]
    spreading_file: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct RatesArgs {
    /// JSON rate-sweep config; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    /// Number of users K (columns).
    #[arg(long)]
    k: usize,
    /// Spreading length N_S (rows).
    #[arg(long)]
    ns: usize,
    /// Seed of the random search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ring size used when rating candidates.
    #[arg(long, default_value_t = 2)]
    q: u64,
    /// Design SNR in dB used when rating candidates.
    #[arg(long, default_value_t = 10.0)]
    design_snr: f64,
    /// Accept the first candidate whose symmetric rate exceeds this (bits).
    #[arg(long, default_value_t = 0.0)]
    r0: f64,
    /// Candidates tried before keeping the best one.
    #[arg(long, default_value_t = 20)]
    attempts: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_detector(s: &str) -> Result<DetectorKind, String> {
    s.parse().map_err(|e: LcmaError| e.to_string())
}

fn parse_receiver(s: &str) -> Result<ReceiverMode, String> {
    s.parse().map_err(|e: LcmaError| e.to_string())
}

fn sim_config(args: &SimArgs) -> lcma::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = &args.$field { cfg.$field = v.clone(); })* };
    }
    set!(q, users, ns, nr, trials, max_frame_errors, detector, receiver, list_size, seed);
    if let Some(t) = args.theta {
        cfg.theta = Some(t);
    }
    if let Some(p) = &args.code_file {
        cfg.code_file = Some(p.clone());
    }
    if let Some(p) = &args.spreading_file {
        cfg.spreading_file = Some(p.clone());
    }
    if let Some(p) = &args.out {
        cfg.out = Some(p.clone());
    }
    if let Some(s) = &args.snr {
        cfg.snr_db = parse_snr_range(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rates_config(args: &RatesArgs) -> lcma::Result<RateSweepConfig> {
    let mut cfg = match &args.config {
        Some(p) => RateSweepConfig::load(p)?,
        None => RateSweepConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = &args.out {
        cfg.out = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> lcma::Result<()> {
    match cli.command {
        Command::Sim(args) => {
            let cfg = sim_config(&args)?;
            let rows = run_experiment(&cfg)?;
            if cfg.out.is_none() {
                print!("{}", format_csv(&rows));
            }
        }
        Command::Rates(args) => {
            let cfg = rates_config(&args)?;
            let rows = run_rate_sweep(&cfg)?;
            if cfg.out.is_none() {
                print!("{}", format_rate_csv(&rows));
            }
        }
        Command::GenSpreading(args) => {
            let cfg = SpreadingGenConfig {
                q: args.q,
                rho_design: 10f64.powf(args.design_snr / 10.0),
                r0: args.r0,
                max_attempts: args.attempts,
                ..SpreadingGenConfig::new(args.k, args.ns, args.seed)
            };
            let out = generate_spreading(&cfg).map_err(|e| match e {
                LcmaError::InvalidArgument(m) => LcmaError::Config(m),
                other => other,
            })?;
            log::info!(
                "symmetric rate {:.4} after {} attempts (accepted: {})",
                out.sym_rate,
                out.attempts,
                out.accepted
            );
            match args.out {
                Some(p) => std::fs::write(&p, out.matrix.to_text())?,
                None => print!("{}", out.matrix.to_text()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli).context("lcma") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            let config = matches!(e.downcast_ref::<LcmaError>(), Some(LcmaError::Config(_)));
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
