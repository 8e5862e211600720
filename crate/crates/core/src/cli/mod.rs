//! Batch front end for the `rpp` binary.
//!
//! Each subcommand reads a TOML run configuration, validates every table it needs,
//! computes in memory and only then writes its artifacts, together with
//! `config.toml` (the resolved configuration) and `manifest.json`. Files are staged
//! in a hidden directory and moved into place once all of them are written; on
//! failure the staging directory is removed.
//!
//! Exit status: 0 on success, 2 for configuration or input errors, 3 for numerical
//! failures.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::RunConfig;

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate patterns from `[model]` on `[window]`.
    Simulate,
    /// Profile the Strauss pseudo-likelihood over the `(R, h)` grids.
    Profile,
    /// Pilot run: prior-predictive simulations and the summary regression.
    Pilot,
    /// Pilot run followed by ABC-MCMC (or rejection) on `[data]`.
    Fit,
    /// Prior-predictive Monte Carlo test of close-pair counts.
    Check,
    /// Ranked probability scores of fitted models on random regions.
    Rps,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Profile => "profile",
            Command::Pilot => "pilot",
            Command::Fit => "fit",
            Command::Check => "check",
            Command::Rps => "rps",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rpp", version, about = "Simulate, fit and assess repulsive point processes")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; overrides `threads` in the configuration.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::RowsOutsideWindow { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidModel(_)
        | Error::InvalidPrior(_)
        | Error::InvalidWindow(_)
        | Error::PointOutsideWindow { .. }
        | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn error_kind(code: i32) -> &'static str {
    if code == EXIT_CONFIG {
        "config"
    } else {
        "numerical"
    }
}

/// Parses arguments, runs the subcommand and returns the process exit status.
/// Failures are reported on stderr as a one-line JSON object.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_args(&args) {
        Ok(out) => {
            log::info!("{} finished; artifacts in {}", args.command.name(), out.display());
            EXIT_OK
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", json!({ "error": error_kind(code), "command": args.command.name(), "message": e.to_string() }));
            code
        }
    }
}

fn run_args(args: &Args) -> Result<PathBuf> {
    let path = args.config.as_ref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    let out = match (&args.out, &cfg.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => cfg.resolve(o),
        (None, None) => return Err(Error::Config("no output directory: set `out` or pass --out".into())),
    };
    execute(args.command, &cfg, &out)?;
    Ok(out)
}

/// Validates `cfg` for `cmd`, runs it on a pool of the configured size and writes
/// the artifacts into `out`. Returns the written file names.
pub fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    cfg.validate_for(cmd)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let artifacts = pool.install(|| commands::dispatch(cmd, cfg))?;
    commit(cmd, cfg, out, artifacts)
}

/// Named file contents produced by a command.
pub(crate) type Artifacts = Vec<(String, Vec<u8>)>;

fn commit(cmd: Command, cfg: &RunConfig, out: &Path, mut artifacts: Artifacts) -> Result<Vec<String>> {
    let names: Vec<String> = artifacts.iter().map(|(n, _)| n.clone()).collect();
    let manifest = json!({
        "command": cmd.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "threads": cfg.threads,
        "files": names,
        "config": serde_json::to_value(cfg).map_err(|e| Error::Numerical(e.to_string()))?,
    });
    artifacts.push(("config.toml".into(), cfg.to_toml().into_bytes()));
    artifacts.push(("manifest.json".into(), pretty(&manifest).into_bytes()));

    fs::create_dir_all(out)?;
    let staging = out.join(format!(".staging-{}", cmd.name()));
    let staged = (|| -> Result<()> {
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        for (name, bytes) in &artifacts {
            fs::write(staging.join(name), bytes)?;
        }
        for (name, _) in &artifacts {
            fs::rename(staging.join(name), out.join(name))?;
        }
        Ok(())
    })();
    let _ = fs::remove_dir_all(&staging);
    staged?;
    Ok(artifacts.into_iter().map(|(n, _)| n).collect())
}

pub(crate) fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}
