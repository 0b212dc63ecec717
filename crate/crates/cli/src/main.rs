use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use confined_nls_cli::{apply_overrides, parse_grid, run, Command, RunConfig};

/// Normalized ground and mountain-pass states of the NLS with partial
/// harmonic confinement.
#[derive(Parser)]
#[command(name = "cnls", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// configuration file (key = value with [sections]); defaults otherwise
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory, created if missing
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// worker threads for sweeps and path updates
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// node counts NxM of the command's grid
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// domain extent R
    #[arg(long, global = true)]
    extent: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// GN constant, existence threshold, spectral floor
    Constants,
    /// ground state u1
    Ground,
    /// mountain-pass state u2, optionally with the min-max sandwich
    Mpass,
    /// levels on growing truncated domains
    DomainStudy,
    /// small-mass asymptotics
    MuSweep,
    /// GN layer self-checks
    Check,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Constants => Command::Constants,
            Cmd::Ground => Command::Ground,
            Cmd::Mpass => Command::Mpass,
            Cmd::DomainStudy => Command::DomainStudy,
            Cmd::MuSweep => Command::MuSweep,
            Cmd::Check => Command::Check,
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cmd = Command::from(cli.command);
    apply_overrides(&mut cfg, cmd, cli.grid, cli.extent)?;
    let art = run(cmd, &cfg)?;
    art.write(&cli.out)?;
    for c in &art.checks {
        println!("{} {:<36} {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    println!("config {}  -> {}", art.config_hash(), cli.out.display());
    Ok(art.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
