mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::{resolve, Cli, Command, ConfigError, RunConfig};
use output::OutDir;

const EXIT_CONFIG: u8 = 1;
const EXIT_VERIFICATION: u8 = 2;

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("UNFOLD_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("UNFOLD_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn execute(command: &Command) -> anyhow::Result<commands::Outcome> {
    let (config, dir) = resolve(command)?;
    init_threads()?;
    let mut out = OutDir::create(&dir)?;
    out.write("config.json", config.to_json().as_bytes())?;
    let outcome = match &config {
        RunConfig::Certify(c) => commands::certify::run(c, &mut out)?,
        RunConfig::Residual(c) => commands::residual::run(c, &mut out)?,
        RunConfig::Shell(c) => commands::shell::run(c, &mut out)?,
        RunConfig::Evolve(c) => commands::evolve::run(c, &mut out)?,
        RunConfig::Action(c) => commands::action::run(c, &mut out)?,
    };
    for path in out.written() {
        eprintln!("wrote {}", path.display());
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(outcome) if outcome.passed() => ExitCode::SUCCESS,
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("verification failed: {f}");
            }
            ExitCode::from(EXIT_VERIFICATION)
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VERIFICATION)
        }
    }
}
