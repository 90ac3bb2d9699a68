use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use ebg_cli::commands;
use ebg_cli::scenario::Scenario;
use ebg_core::report::CheckReport;

#[derive(Parser)]
#[command(
    name = "ebg",
    version,
    about = "Volume comparison bounds for homogeneous product spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's `outputs`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides every seed in the scenario.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Volume, eBG, BG and scalar-model curves per space.
    Bounds(Common),
    /// Operator Jacobi trajectories and the randomized Jacobi suites.
    JacobiLab(Common),
    /// Exact small-ball series coefficients.
    Series(Common),
    /// Large-radius eBG/BG behaviour of the beam spectrum.
    Asymptotics(Common),
    /// Runs every check and writes report.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Only run checks whose name starts with this prefix (repeatable).
        #[arg(long)]
        only: Vec<String>,
    },
}

fn summarize(reports: &[CheckReport]) -> ExitCode {
    let mut failed = false;
    for r in reports {
        let status = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None if r.min_margin.is_some() => "INFO",
            None => "SKIP",
        };
        failed |= r.failed();
        let margin = r.min_margin.map_or("-".to_string(), |m| format!("{m:.3e}"));
        println!(
            "{status} {} trials={} min_margin={margin}",
            r.check, r.trials
        );
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let load = |c: &Common| -> Result<(Scenario, PathBuf)> {
        let sc = Scenario::load(&c.scenario, c.seed)?;
        let out = c.out.clone().unwrap_or_else(|| sc.outputs.clone());
        Ok((sc, out))
    };
    Ok(match cli.command {
        Command::Bounds(c) => {
            let (sc, out) = load(&c)?;
            summarize(&commands::bounds(&sc, &out)?)
        }
        Command::JacobiLab(c) => {
            let (sc, out) = load(&c)?;
            summarize(&commands::jacobi_lab(&sc, &out)?)
        }
        Command::Series(c) => {
            let (sc, out) = load(&c)?;
            commands::series(&sc, &out)?;
            ExitCode::SUCCESS
        }
        Command::Asymptotics(c) => {
            let (sc, out) = load(&c)?;
            commands::asymptotics(&sc, &out)?;
            ExitCode::SUCCESS
        }
        Command::Verify { common, only } => {
            let (sc, out) = load(&common)?;
            summarize(&commands::verify(&sc, &out, &only)?)
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
