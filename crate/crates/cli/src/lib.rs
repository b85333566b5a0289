//! Command-line driver: resolves layered configuration, runs one
//! simulation pipeline, and writes CSV, a gnuplot script and a manifest.

pub mod args;
pub mod commands;
pub mod csvio;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod settings;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use args::{Cli, Command};
pub use error::{CliError, EXIT_RUNTIME, EXIT_USAGE};

use commands::Report;
use manifest::{load_manifest, Manifest, MANIFEST_FILE};
use settings::{has_config_flags, load_config, resolve, seed_from_env, ConfigFile, RunConfig, SEED_ENV};

/// Result of a successful run.
#[derive(Debug)]
pub struct Outcome {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub report: Report,
}

pub fn default_out_dir(subcommand: &str) -> PathBuf {
    Path::new("stcomb-out").join(subcommand)
}

/// The configuration a parsed command line resolves to.
pub fn resolve_command(command: &Command, env_seed: Option<&str>) -> Result<RunConfig, CliError> {
    let common = command.common();
    if let Some(path) = &common.manifest {
        if has_config_flags(command) {
            return Err(CliError::Usage(
                "--manifest cannot be combined with configuration flags".into(),
            ));
        }
        let m = load_manifest(path)?;
        if m.subcommand != command.name() {
            return Err(CliError::Manifest {
                path: path.clone(),
                msg: format!("recorded for '{}', not '{}'", m.subcommand, command.name()),
            });
        }
        let cfg = m.run_config().map_err(|msg| CliError::Manifest {
            path: path.clone(),
            msg,
        })?;
        cfg.validate()?;
        return Ok(cfg);
    }
    let file = match &common.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    resolve(command, &file, seed_from_env(env_seed)?)
}

/// Runs a parsed command line. `env_seed` is the value of `STCOMB_SEED`.
pub fn run(cli: &Cli, env_seed: Option<&str>) -> Result<Outcome, CliError> {
    let cfg = resolve_command(&cli.command, env_seed)?;
    let common = cli.command.common();
    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir(cfg.subcommand()));
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
    let report = pool.install(|| commands::execute(&cfg, &out_dir))?;

    let mut outputs = report.outputs.clone();
    outputs.push(MANIFEST_FILE.to_string());
    let manifest = Manifest::new(&cfg, outputs);
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_json()).map_err(|e| CliError::io(&path, e))?;
    if report.failures > 0 {
        print!("{}", report.summary);
        return Err(CliError::SelftestFailed(report.failures));
    }
    Ok(Outcome {
        config: cfg,
        out_dir,
        report,
    })
}

/// Parses `args` (including the program name), runs, prints and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I, env_seed: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, env_seed) {
        Ok(o) => {
            print!("{}", o.report.summary);
            for f in &o.report.outputs {
                println!("wrote {}", o.out_dir.join(f).display());
            }
            println!("wrote {}", o.out_dir.join(MANIFEST_FILE).display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Process entry point reading `STCOMB_SEED` from the environment.
pub fn main_from_env() -> i32 {
    let seed = std::env::var(SEED_ENV).ok();
    main_with_args(std::env::args_os(), seed.as_deref())
}
