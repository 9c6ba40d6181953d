use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gasnet_cli::{run, Command, RunOptions};

/// Build, verify and simulate gas-network state-space models from
/// declarative network files.
#[derive(Parser)]
#[command(name = "gasnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Parse the file, construct all components and close the network.
    Build(CommonArgs),
    /// Run the conservation-of-mass checks.
    Check(CommonArgs),
    /// Print the DC gain of the closed network.
    Dcgain(CommonArgs),
    /// Run the file's frequency-sweep analyses and write CSV tables.
    Freq(CommonArgs),
    /// Run the file's time-domain simulations and write CSV trajectories.
    Sim(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Network file.
    file: PathBuf,
    /// Output directory for CSV files (default: $GASNET_OUT, else ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Build the network through both interconnection pathways and report
    /// the maximum deviation.
    #[arg(long)]
    cross_check: bool,
    /// Override the mass-check tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Emit the run report as JSON on stdout.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        CliCommand::Build(a) => (Command::Build, a),
        CliCommand::Check(a) => (Command::Check, a),
        CliCommand::Dcgain(a) => (Command::DcGain, a),
        CliCommand::Freq(a) => (Command::Freq, a),
        CliCommand::Sim(a) => (Command::Sim, a),
    };
    let options = RunOptions {
        out_dir: args.out.clone(),
        cross_check: args.cross_check,
        tol: args.tol,
    };
    match run(&args.file, command, &options) {
        Ok(report) => {
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                for analysis in &report.analyses {
                    println!("{}", analysis.human_line());
                }
            }
            if report.exit_status == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
