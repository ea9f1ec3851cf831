//! Command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nems_cli::{exit, parse_config, run, Mode, RunOptions};

#[derive(Parser)]
#[command(name = "nems", version, about = "Steady states and transport of a vibrating quantum dot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured task.
    Run(RunArgs),
    /// Write bath correlations, Lamb-shift bounds and secular ratios.
    Diagnostics(RunArgs),
    /// Check a configuration without solving.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Reject unknown fields.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Reject unknown config fields and exit with code 4 on guard violations.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load(path: &PathBuf, strict: bool) -> Result<nems_cli::RunConfig, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: reading {}: {e}", path.display());
        exit::CONFIG
    })?;
    let (cfg, warnings) = parse_config(&text, strict).map_err(|e| {
        eprintln!("config error: {e}");
        exit::CONFIG
    })?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(cfg)
}

fn execute(args: RunArgs, mode: Mode) -> i32 {
    let cfg = match load(&args.config, args.strict) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let opts = RunOptions { threads: args.threads, strict: args.strict, seed: args.seed };
    match run(&cfg, mode, &args.out, opts) {
        Ok(summary) => {
            for v in &summary.violations {
                log::warn!("guard: {v}");
            }
            if summary.failed > 0 {
                log::warn!("{} of {} points failed", summary.failed, summary.points);
            }
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<nems_cli::ConfigError>().is_some() {
                exit::CONFIG
            } else {
                1
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match Cli::parse().command {
        Command::Run(a) => execute(a, Mode::Task),
        Command::Diagnostics(a) => execute(a, Mode::Diagnostics),
        Command::Validate { config, strict } => match load(&config, strict) {
            Ok(_) => {
                println!("ok");
                exit::SUCCESS
            }
            Err(code) => code,
        },
    };
    ExitCode::from(code as u8)
}
