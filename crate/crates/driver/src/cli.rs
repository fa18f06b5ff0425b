//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use aia_core::channel::ModelMode;
use aia_core::waveform::WaveformKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind, Overrides};
use crate::experiments;

#[derive(Debug, Parser)]
#[command(
    name = "aia",
    version,
    about = "Asynchronous interference alignment experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Alignment residuals, receiver rank ratios and Vandermonde distinctness per trial.
    AlignCheck(Flags),
    /// Circulant and phase-model approximation errors against their bounds.
    ErrorDecay(Flags),
    /// Sum-rate versus SNR and the high-SNR slope.
    DofSweep(Flags),
    /// Multi-antenna recovery and per-antenna leakage.
    MimoDemo(Flags),
}

impl Command {
    fn parts(&self) -> (ExperimentKind, &Flags) {
        match self {
            Command::AlignCheck(f) => (ExperimentKind::AlignCheck, f),
            Command::ErrorDecay(f) => (ExperimentKind::ErrorDecay, f),
            Command::DofSweep(f) => (ExperimentKind::DofSweep, f),
            Command::MimoDemo(f) => (ExperimentKind::MimoDemo, f),
        }
    }
}

#[derive(Debug, Args)]
pub struct Flags {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<ModelMode>,
    /// Number of users.
    #[arg(long = "K")]
    pub users: Option<usize>,
    /// Antennas per node.
    #[arg(long = "M")]
    pub antennas: Option<usize>,
    /// Alignment order.
    #[arg(long = "n")]
    pub order: Option<usize>,
    /// Waveform half-support in symbols (0 = untruncated).
    #[arg(long = "u")]
    pub half_support: Option<u32>,
    /// Excess bandwidth.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Pulse family: sinc, rc or rrc.
    #[arg(long)]
    pub waveform: Option<WaveformKind>,
    /// Force all delays to a common value.
    #[arg(long)]
    pub synchronous: bool,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_max: Option<f64>,
    #[arg(long)]
    pub snr_steps: Option<usize>,
}

impl Flags {
    fn overrides(&self, kind: ExperimentKind) -> Overrides {
        Overrides {
            kind: Some(kind),
            seed: self.seed,
            trials: self.trials,
            out: self.out.clone(),
            mode: self.mode,
            users: self.users,
            antennas: self.antennas,
            order: self.order,
            half_support: self.half_support,
            beta: self.beta,
            waveform: self.waveform,
            synchronous: self.synchronous,
            snr_min: self.snr_min,
            snr_max: self.snr_max,
            snr_steps: self.snr_steps,
        }
    }
}

/// Config file (if any) with the command's flags applied.
pub fn resolve(command: &Command) -> Result<ExperimentConfig, ConfigError> {
    let (kind, flags) = command.parts();
    let mut cfg = match &flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&flags.overrides(kind));
    cfg.validate()?;
    Ok(cfg)
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// Parses `args` (program name first), runs the experiment and returns the exit code.
pub fn run_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            }
        }
    }
}

pub fn execute(cli: Cli) -> u8 {
    let cfg = match resolve(&cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let report = match experiments::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let written = match &cfg.experiment.out {
        Some(path) => std::fs::File::create(path)
            .and_then(|f| report.table.write(&cfg, std::io::BufWriter::new(f))),
        None => report.table.write(&cfg, std::io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: writing CSV: {e}");
        return EXIT_CHECK_FAILED;
    }
    let mut err = std::io::stderr().lock();
    for note in &report.notes {
        let _ = writeln!(err, "{note}");
    }
    let _ = writeln!(
        err,
        "{}: {}/{} checks passed",
        cfg.experiment.kind,
        report.checks - report.failures,
        report.checks
    );
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}
