mod args;
mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Outcome;
use config::RunConfig;
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<Outcome> {
    let cfg = match &cli.global.config {
        Some(p) => {
            config::require_existing([p])?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    let seed = cli.global.seed.or(cfg.seed);
    let threads = cli.global.threads.or(cfg.threads);
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    let work = move || match cli.command {
        Command::Fit(a) => commands::fit(a, cfg, seed),
        Command::Fuse(a) => commands::fuse(a, cfg),
        Command::Validate(a) => commands::validate(a, cfg),
        Command::Metrics(m) => commands::metrics(m, seed.unwrap_or(0)),
        Command::Synth(a) => commands::synth(a, cfg, seed.unwrap_or(0)),
    };
    in_pool(threads, work)
}

#[cfg(feature = "parallel")]
fn in_pool<T: Send>(threads: Option<usize>, work: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                work()
            }
        },
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn in_pool<T: Send>(_threads: Option<usize>, work: impl FnOnce() -> T + Send) -> T {
    work()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    let json = cli.global.json;
    match run(cli) {
        Ok(outcome) => {
            let text = outcome.report.render(json);
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
