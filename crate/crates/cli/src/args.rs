use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "stcomb",
    version,
    about = "Universal space-time diversity combining: outage, relay and sub-Nyquist simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical CDF of mutual information / symmetric capacity.
    Cdf(SimArgs),
    /// Single-user outage probability versus SNR.
    Outage(SimArgs),
    /// Multi-user (MAC) outage of the symmetric capacity.
    MacOutage(SimArgs),
    /// Symbol error rate of two relays over finite-rate fronthaul.
    RelaySer(RelayArgs),
    /// Sub-Nyquist PAM acquisition receivers.
    Subnyquist(SubnyquistArgs),
    /// Predicted and empirical two-user outage ratios.
    Asymptotics(AsymptoticsArgs),
    /// Module invariant suites.
    Selftest(SelftestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cdf(_) => "cdf",
            Command::Outage(_) => "outage",
            Command::MacOutage(_) => "mac-outage",
            Command::RelaySer(_) => "relay-ser",
            Command::Subnyquist(_) => "subnyquist",
            Command::Asymptotics(_) => "asymptotics",
            Command::Selftest(_) => "selftest",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Cdf(a) | Command::Outage(a) | Command::MacOutage(a) => &a.common,
            Command::RelaySer(a) => &a.common,
            Command::Subnyquist(a) => &a.common,
            Command::Asymptotics(a) => &a.common,
            Command::Selftest(a) => &a.common,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Master seed (overrides the config file and STCOMB_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Re-run exactly the configuration recorded in a manifest.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Receive antennas (1, 2 or 4).
    #[arg(long = "m")]
    pub antennas: Option<usize>,
    #[arg(long)]
    pub users: Option<usize>,
    /// Target rate in bits per complex symbol; with several users this is
    /// the sum N·R of the symmetric rates.
    #[arg(long)]
    pub rate: Option<f64>,
    /// SNR grid in dB, `start:step:stop` or a single value.
    #[arg(long)]
    pub snr: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Comma-separated: mrc, sc, single, ala2, ala4-dith, ala4-quasi.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
}

#[derive(Debug, Args, Default)]
pub struct RelayArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub snr: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Comma-separated bits per real fronthaul sample, or `inf`.
    #[arg(long, value_delimiter = ',')]
    pub bits: Option<Vec<String>>,
    /// Comma-separated: universal, single-antenna, no-combining.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// Quantizer loading rule: conditional or ensemble.
    #[arg(long)]
    pub loading: Option<String>,
    /// Subtractive dither in the relay quantizers.
    #[arg(long)]
    pub dither: Option<bool>,
    /// Remove the MMSE bias before slicing.
    #[arg(long)]
    pub unbiased: Option<bool>,
}

#[derive(Debug, Args, Default)]
pub struct SubnyquistArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub snr: Option<String>,
    /// Frames to simulate.
    #[arg(long, alias = "trials")]
    pub frames: Option<u64>,
    /// Symbols per frame (multiple of 4).
    #[arg(long)]
    pub symbols: Option<usize>,
    /// Number of pulses in the dictionary.
    #[arg(long)]
    pub dictionary: Option<usize>,
    /// Comma-separated: matched-filter, tap-selection, universal.
    #[arg(long, value_delimiter = ',')]
    pub receivers: Option<Vec<String>>,
    /// Bits per real sample in the universal front end (unquantized if absent).
    #[arg(long)]
    pub quant_bits: Option<u32>,
}

#[derive(Debug, Args, Default)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub snr: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Full sample sizes instead of the quick pass.
    #[arg(long)]
    pub full: bool,
}
