mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use toml::Value;

use config::{ConfigError, Settings};
use report::Output;

/// Experiments for the linearized and nonlinear two-fluid capillary system.
#[derive(Parser, Debug)]
#[command(name = "twofluid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Random seed; overrides `init.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print only failures.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Tabulate the pressure-equilibrium closure.
    Closure,
    /// Compare the explicit Green matrix against an ODE oracle and fit decay envelopes.
    Green,
    /// Fit low-frequency decay rates of the linear semigroup.
    LinearDecay,
    /// Run the pseudo-spectral solver and record norms.
    Simulate,
    /// Evaluate the decay functionals and fitted rates on a trajectory.
    DecayReport,
    /// Check the Littlewood-Paley partition and Besov estimates.
    LpCheck,
    /// List every configuration key, its default and environment variable.
    Keys,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Closure => "closure",
            Command::Green => "green",
            Command::LinearDecay => "linear-decay",
            Command::Simulate => "simulate",
            Command::DecayReport => "decay-report",
            Command::LpCheck => "lp-check",
            Command::Keys => "keys",
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(te) = cause.downcast_ref::<twofluid::Error>() {
            return te.exit_code() as u8;
        }
    }
    5
}

fn execute(cli: &Cli) -> Result<u8> {
    let mut settings = Settings::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(seed) = cli.seed {
        settings.set_flag("init", "seed", Value::Integer(seed as i64));
    }
    if cli.command == Command::Keys {
        for (section, key, value, src, env, doc) in settings.entries() {
            println!("{section}.{key} = {value} [{}] {env}: {doc}", src.name());
        }
        return Ok(0);
    }
    let derived = commands::validate(&settings)?;
    let seed = settings.i64("init", "seed") as u64;
    let mut out = Output::new(&cli.out, seed)?;
    let outcome = match cli.command {
        Command::Closure => commands::closure(&settings, &mut out)?,
        Command::Green => commands::green(&settings, &mut out)?,
        Command::LinearDecay => commands::linear_decay(&settings, &mut out)?,
        Command::Simulate => commands::simulate(&settings, &mut out)?,
        Command::DecayReport => commands::decay_report(&settings, &mut out)?,
        Command::LpCheck => commands::lp_check(&settings, &mut out, seed)?,
        Command::Keys => unreachable!(),
    };
    let mut all_derived = derived;
    all_derived.extend(outcome.derived.iter().cloned());
    out.manifest(cli.command.name(), &settings, &all_derived, &outcome.checks)?;

    for c in &outcome.checks {
        if !cli.quiet || !c.pass {
            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if let Some((class, msg)) = &outcome.failure {
        eprintln!("error: run stopped: {msg}");
        return Ok(class.exit_code() as u8);
    }
    let failed = outcome.checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", outcome.checks.len());
        return Ok(4);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
