//! Layered configuration: command-line flags over a TOML file over the
//! `STCOMB_SEED` environment variable over built-in defaults.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stcomb::combining::Scheme;
use stcomb::montecarlo::{snr_grid, SimConfig};
use stcomb::relaysim::{BitBudget, LoadingRule, RelayConfig, RelayScheme};
use stcomb::subnyquist::{Receiver, SubnyquistConfig};

use crate::args::{AsymptoticsArgs, Command, RelayArgs, SelftestArgs, SimArgs, SubnyquistArgs};
use crate::error::{invalid, CliError};

pub const SEED_ENV: &str = "STCOMB_SEED";
pub const DEFAULT_SEED: u64 = 1;

/// Keys accepted in a configuration file. Every key is optional and
/// subcommands ignore keys they do not use.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub m: Option<usize>,
    pub users: Option<usize>,
    pub rate: Option<f64>,
    pub snr: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub schemes: Option<Vec<String>>,
    pub bits: Option<Vec<BitsEntry>>,
    pub loading: Option<String>,
    pub dither: Option<bool>,
    pub unbiased: Option<bool>,
    pub frames: Option<u64>,
    pub symbols: Option<usize>,
    pub dictionary: Option<usize>,
    pub receivers: Option<Vec<String>>,
    pub quant_bits: Option<u32>,
    pub full: Option<bool>,
}

/// A bit budget written either as an integer or as `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BitsEntry {
    Int(u32),
    Text(String),
}

impl BitsEntry {
    fn as_text(&self) -> String {
        match self {
            BitsEntry::Int(v) => v.to_string(),
            BitsEntry::Text(s) => s.clone(),
        }
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    parse_config(&text).map_err(|msg| CliError::Config {
        path: path.to_path_buf(),
        msg,
    })
}

/// `start:step:stop` in dB (inclusive), or a single value.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Invalid(format!("SNR grid '{s}' is not start:step:stop"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    match nums.as_slice() {
        [v] if v.is_finite() => Ok(vec![*v]),
        [start, step, stop] => snr_grid(*start, *step, *stop).map_err(invalid),
        _ => Err(bad()),
    }
}

pub fn seed_from_env(value: Option<&str>) -> Result<Option<u64>, CliError> {
    value
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Invalid(format!("{SEED_ENV}='{v}' is not an unsigned integer")))
        })
        .transpose()
}

fn parse_list<T: FromStr<Err = stcomb::Error>>(items: &[String]) -> Result<Vec<T>, CliError> {
    items.iter().map(|s| s.parse::<T>().map_err(invalid)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub rate: f64,
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    pub full: bool,
    pub seed: u64,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Cdf(SimConfig),
    Outage(SimConfig),
    MacOutage(SimConfig),
    RelaySer(RelayConfig),
    Subnyquist(SubnyquistConfig),
    Asymptotics(AsymptoticsConfig),
    Selftest(SelftestConfig),
}

pub const SUBCOMMANDS: [&str; 7] = [
    "cdf",
    "outage",
    "mac-outage",
    "relay-ser",
    "subnyquist",
    "asymptotics",
    "selftest",
];

impl RunConfig {
    pub fn subcommand(&self) -> &'static str {
        match self {
            RunConfig::Cdf(_) => "cdf",
            RunConfig::Outage(_) => "outage",
            RunConfig::MacOutage(_) => "mac-outage",
            RunConfig::RelaySer(_) => "relay-ser",
            RunConfig::Subnyquist(_) => "subnyquist",
            RunConfig::Asymptotics(_) => "asymptotics",
            RunConfig::Selftest(_) => "selftest",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::Cdf(c) | RunConfig::Outage(c) | RunConfig::MacOutage(c) => c.seed,
            RunConfig::RelaySer(c) => c.seed,
            RunConfig::Subnyquist(c) => c.seed,
            RunConfig::Asymptotics(c) => c.seed,
            RunConfig::Selftest(c) => c.seed,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let v = match self {
            RunConfig::Cdf(c) | RunConfig::Outage(c) | RunConfig::MacOutage(c) => serde_json::to_value(c),
            RunConfig::RelaySer(c) => serde_json::to_value(c),
            RunConfig::Subnyquist(c) => serde_json::to_value(c),
            RunConfig::Asymptotics(c) => serde_json::to_value(c),
            RunConfig::Selftest(c) => serde_json::to_value(c),
        };
        v.expect("configs serialize to JSON")
    }

    pub fn from_json(subcommand: &str, value: serde_json::Value) -> Result<Self, String> {
        let e = |e: serde_json::Error| e.to_string();
        let cfg = match subcommand {
            "cdf" => RunConfig::Cdf(serde_json::from_value(value).map_err(e)?),
            "outage" => RunConfig::Outage(serde_json::from_value(value).map_err(e)?),
            "mac-outage" => RunConfig::MacOutage(serde_json::from_value(value).map_err(e)?),
            "relay-ser" => RunConfig::RelaySer(serde_json::from_value(value).map_err(e)?),
            "subnyquist" => RunConfig::Subnyquist(serde_json::from_value(value).map_err(e)?),
            "asymptotics" => RunConfig::Asymptotics(serde_json::from_value(value).map_err(e)?),
            "selftest" => RunConfig::Selftest(serde_json::from_value(value).map_err(e)?),
            other => return Err(format!("unknown subcommand '{other}'")),
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            RunConfig::Cdf(c) | RunConfig::Outage(c) | RunConfig::MacOutage(c) => c.validate().map_err(invalid),
            RunConfig::RelaySer(c) => c.validate().map_err(invalid),
            RunConfig::Subnyquist(c) => c.validate().map_err(invalid),
            RunConfig::Asymptotics(c) => {
                let probe = SimConfig {
                    snr_grid_db: c.snr_grid_db.clone(),
                    trials: c.trials,
                    seed: c.seed,
                    schemes: vec![Scheme::Ala2],
                    users: 2,
                    antennas: 2,
                    rate: c.rate,
                };
                probe.validate().map_err(invalid)
            }
            RunConfig::Selftest(_) => Ok(()),
        }
    }
}

/// Schemes defined for `antennas` and `users`, in canonical order.
pub fn default_schemes(antennas: usize, users: usize) -> Vec<Scheme> {
    Scheme::ALL
        .into_iter()
        .filter(|s| s.supports(antennas))
        .filter(|s| users == 1 || !matches!(s, Scheme::Ala4Dith | Scheme::Ala4Quasi))
        .collect()
}

struct Layers<'a> {
    file: &'a ConfigFile,
    env_seed: Option<u64>,
}

impl Layers<'_> {
    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.seed).or(self.env_seed).unwrap_or(DEFAULT_SEED)
    }

    fn snr(&self, flag: &Option<String>, default: &str) -> Result<Vec<f64>, CliError> {
        parse_snr_grid(flag.as_deref().or(self.file.snr.as_deref()).unwrap_or(default))
    }
}

fn resolve_sim(a: &SimArgs, l: &Layers, users: usize, snr: &str, trials: u64) -> Result<SimConfig, CliError> {
    let antennas = a.antennas.or(l.file.m).unwrap_or(2);
    let users = a.users.or(l.file.users).unwrap_or(users);
    let schemes = match a.schemes.as_ref().or(l.file.schemes.as_ref()) {
        Some(list) => parse_list::<Scheme>(list)?,
        None => default_schemes(antennas, users),
    };
    Ok(SimConfig {
        snr_grid_db: l.snr(&a.snr, snr)?,
        trials: a.trials.or(l.file.trials).unwrap_or(trials),
        seed: l.seed(a.common.seed),
        schemes,
        users,
        antennas,
        rate: a.rate.or(l.file.rate).unwrap_or(2.0),
    })
}

fn resolve_relay(a: &RelayArgs, l: &Layers) -> Result<RelayConfig, CliError> {
    let bits = match (&a.bits, &l.file.bits) {
        (Some(list), _) => parse_list::<BitBudget>(list)?,
        (None, Some(list)) => parse_list::<BitBudget>(&list.iter().map(BitsEntry::as_text).collect::<Vec<_>>())?,
        (None, None) => vec![BitBudget::Finite(4), BitBudget::Finite(6), BitBudget::Finite(8)],
    };
    let schemes = match a.schemes.as_ref().or(l.file.schemes.as_ref()) {
        Some(list) => parse_list::<RelayScheme>(list)?,
        None => RelayScheme::ALL.to_vec(),
    };
    let loading = match a.loading.as_ref().or(l.file.loading.as_ref()) {
        Some(s) => s.parse::<LoadingRule>().map_err(invalid)?,
        None => LoadingRule::default(),
    };
    Ok(RelayConfig {
        snr_grid_db: l.snr(&a.snr, "10:2:50")?,
        trials: a.trials.or(l.file.trials).unwrap_or(20_000),
        seed: l.seed(a.common.seed),
        bits,
        schemes,
        loading,
        dither: a.dither.or(l.file.dither).unwrap_or(false),
        unbiased: a.unbiased.or(l.file.unbiased).unwrap_or(true),
    })
}

fn resolve_subnyquist(a: &SubnyquistArgs, l: &Layers) -> Result<SubnyquistConfig, CliError> {
    let receivers = match a.receivers.as_ref().or(l.file.receivers.as_ref()) {
        Some(list) => parse_list::<Receiver>(list)?,
        None => Receiver::ALL.to_vec(),
    };
    Ok(SubnyquistConfig {
        snr_grid_db: l.snr(&a.snr, "0:2:30")?,
        frames: a.frames.or(l.file.frames).unwrap_or(10_000),
        symbols_per_frame: a.symbols.or(l.file.symbols).unwrap_or(16),
        dictionary_size: a.dictionary.or(l.file.dictionary).unwrap_or(8),
        seed: l.seed(a.common.seed),
        receivers,
        bits: a.quant_bits.or(l.file.quant_bits),
    })
}

fn resolve_asymptotics(a: &AsymptoticsArgs, l: &Layers) -> Result<AsymptoticsConfig, CliError> {
    Ok(AsymptoticsConfig {
        rate: a.rate.or(l.file.rate).unwrap_or(2.0),
        snr_grid_db: l.snr(&a.snr, "10:5:40")?,
        trials: a.trials.or(l.file.trials).unwrap_or(1_000_000),
        seed: l.seed(a.common.seed),
    })
}

fn resolve_selftest(a: &SelftestArgs, l: &Layers) -> SelftestConfig {
    SelftestConfig {
        full: a.full || l.file.full.unwrap_or(false),
        seed: l.seed(a.common.seed),
    }
}

/// Merges the layers for `command` and validates the result.
pub fn resolve(command: &Command, file: &ConfigFile, env_seed: Option<u64>) -> Result<RunConfig, CliError> {
    let l = Layers { file, env_seed };
    let cfg = match command {
        Command::Cdf(a) => RunConfig::Cdf(resolve_sim(a, &l, 1, "0", 100_000)?),
        Command::Outage(a) => RunConfig::Outage(resolve_sim(a, &l, 1, "0:2:30", 100_000)?),
        Command::MacOutage(a) => RunConfig::MacOutage(resolve_sim(a, &l, 8, "0:2:30", 100_000)?),
        Command::RelaySer(a) => RunConfig::RelaySer(resolve_relay(a, &l)?),
        Command::Subnyquist(a) => RunConfig::Subnyquist(resolve_subnyquist(a, &l)?),
        Command::Asymptotics(a) => RunConfig::Asymptotics(resolve_asymptotics(a, &l)?),
        Command::Selftest(a) => RunConfig::Selftest(resolve_selftest(a, &l)),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Whether any flag other than `--out`, `--threads` and `--manifest` was
/// given; those cannot be combined with a manifest re-run.
pub fn has_config_flags(command: &Command) -> bool {
    let c = command.common();
    if c.seed.is_some() || c.config.is_some() {
        return true;
    }
    match command {
        Command::Cdf(a) | Command::Outage(a) | Command::MacOutage(a) => {
            a.antennas.is_some()
                || a.users.is_some()
                || a.rate.is_some()
                || a.snr.is_some()
                || a.trials.is_some()
                || a.schemes.is_some()
        }
        Command::RelaySer(a) => {
            a.snr.is_some()
                || a.trials.is_some()
                || a.bits.is_some()
                || a.schemes.is_some()
                || a.loading.is_some()
                || a.dither.is_some()
                || a.unbiased.is_some()
        }
        Command::Subnyquist(a) => {
            a.snr.is_some()
                || a.frames.is_some()
                || a.symbols.is_some()
                || a.dictionary.is_some()
                || a.receivers.is_some()
                || a.quant_bits.is_some()
        }
        Command::Asymptotics(a) => a.rate.is_some() || a.snr.is_some() || a.trials.is_some(),
        Command::Selftest(a) => a.full,
    }
}
