// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pachange::commands;
use pachange::config::Settings;

/// Simulation and change-point inference for preferential attachment trees.
#[derive(Parser)]
#[command(name = "pachange", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow trees; write tree files, leaf trajectories and degree histograms.
    Simulate(RunArgs),
    /// Tabulate limit laws: degree pmfs, leaf curve, variance suite, D(t).
    Limits(RunArgs),
    /// Estimate the change point from trajectory files or simulated runs.
    Estimate(RunArgs),
    /// Fluctuation checks: G_n marginal moments and the after-change clock.
    Fclt(RunArgs),
    /// Largest degrees over an ensemble of tree sizes.
    Maxdeg(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config (a settings object or a previous manifest.json).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Limits(a) => ("limits", a),
        Command::Estimate(a) => ("estimate", a),
        Command::Fclt(a) => ("fclt", a),
        Command::Maxdeg(a) => ("maxdeg", a),
    };
    let result = (|| {
        let base = match &args.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let settings = args.settings.over(base);
        let manifest = commands::run(name, &settings)?;
        println!(
            "{name}: wrote {} files to {} in {:.2}s",
            manifest.outputs.len() + 1,
            settings.out_dir(name).display(),
            manifest.wall_clock_seconds
        );
        anyhow::Ok(())
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
