//! Command-line front end.

pub mod commands;
pub mod config;
pub mod cycle;
pub mod format;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{config as config_err, Result};
use commands::Artifact;
use config::ConfigTree;

const MODULE: &str = "cli";

#[derive(Debug, Parser)]
#[command(
    name = "porocell",
    version,
    about = "Ultrasonic time-of-flight modelling for layered porous battery cells"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// TOML config; `[materials]` and `[compositions]` are shared by all subcommands.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file, or a directory for subcommands with several artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override a config key, e.g. `--set biot.porosity=0.35`. Last one wins.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; all outputs are independent of this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Material catalog and composition volume fractions.
    Materials,
    /// Biot fast and slow longitudinal velocities.
    Biot {
        /// Alias of --config.
        #[arg(long)]
        medium: Option<PathBuf>,
    },
    /// Bubbly-liquid velocity ratio surface.
    Bubbly,
    /// Voxel wave simulation through a generated microstructure.
    Microsim,
    /// Layered-stack time of flight.
    Stack {
        /// Use the built-in reference cell regardless of `[stack]`.
        #[arg(long)]
        table3: bool,
    },
    /// Lithium-loss scenario and binder-degradation sweep.
    Ageing,
    /// Arrival picking and capacity/ToF correlation.
    Analyze,
}

/// Run a parsed invocation and return its artifacts without writing them.
pub fn execute(cli: &Cli) -> Result<Vec<Artifact>> {
    let path = match &cli.command {
        Command::Biot { medium: Some(m) } => Some(m.as_path()),
        _ => cli.common.config.as_deref(),
    };
    let mut cfg = ConfigTree::load(path)?;
    cfg.apply_overrides(&cli.common.sets)?;
    let csv_out = cli
        .common
        .out
        .as_deref()
        .and_then(Path::extension)
        .is_some_and(|e| e == "csv");
    match &cli.command {
        Command::Materials => commands::materials(&cfg),
        Command::Biot { .. } => commands::biot(&cfg, csv_out),
        Command::Bubbly => commands::bubbly(&cfg),
        Command::Microsim => commands::microsim(&cfg),
        Command::Stack { table3 } => commands::stack(&cfg, *table3),
        Command::Ageing => commands::ageing(&cfg),
        Command::Analyze => commands::analyze(&cfg, cli.common.seed),
    }
}

/// Write artifacts: a single one to `out` as a file, several into `out` as a
/// directory. Without `out` the first artifact goes to stdout.
pub fn write_artifacts(artifacts: &[Artifact], out: Option<&Path>) -> Result<()> {
    let io = |p: &Path, e: std::io::Error| {
        config_err(MODULE, format!("cannot write {}: {e}", p.display()))
    };
    match out {
        None => {
            use std::io::Write;
            if let Some(a) = artifacts.first() {
                std::io::stdout()
                    .write_all(a.bytes())
                    .map_err(|e| io(Path::new("stdout"), e))?;
            }
        }
        Some(p) if artifacts.len() == 1 && !p.is_dir() => {
            std::fs::write(p, artifacts[0].bytes()).map_err(|e| io(p, e))?
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
            for a in artifacts {
                let f = dir.join(a.name());
                std::fs::write(&f, a.bytes()).map_err(|e| io(&f, e))?;
            }
        }
    }
    Ok(())
}

/// Process entry point; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.threads {
        pool = pool.num_threads(n.max(1));
    }
    let result = pool
        .build()
        .map_err(|e| config_err(MODULE, e.to_string()))
        .and_then(|p| p.install(|| execute(&cli)))
        .and_then(|a| write_artifacts(&a, cli.common.out.as_deref()));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
