use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvtherm_cli::commands::{self, Command};
use cvtherm_cli::{CliError, ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "cvtherm", version, about = "Collisional Gaussian thermometry")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Steady state of the system mode (JSON)
    Steady(Common),
    /// QFI and QFI per ancilla against N (CSV)
    Curve(Common),
    /// Sigmoid fit of the QFI density and N* for each epsilon (JSON)
    Fit(Common),
    /// Wall time of each QFI method against N (CSV)
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's `output` key, then stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvtherm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cmd, args) = match cli.cmd {
        Cmd::Steady(a) => (Command::Steady, a),
        Cmd::Curve(a) => (Command::Curve, a),
        Cmd::Fit(a) => (Command::Fit, a),
        Cmd::Bench(a) => (Command::Bench, a),
    };
    let src = fs::read_to_string(&args.config).map_err(|e| ConfigError {
        key: None,
        line: None,
        message: format!("cannot read {}: {e}", args.config.display()),
    })?;
    let cfg = RunConfig::parse(&src)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.workers {
        pool = pool.num_threads(k as usize);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| commands::run(cmd, &cfg))?;

    match args.out.or_else(|| cfg.output.clone()) {
        Some(path) => fs::write(path, &report.body)?,
        None => std::io::stdout().lock().write_all(report.body.as_bytes())?,
    }
    if report.unstable.is_empty() {
        Ok(())
    } else {
        for msg in &report.unstable[1..] {
            eprintln!("cvtherm: {msg}");
        }
        Err(CliError::Unstable(report.unstable[0].clone()))
    }
}
