use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiretract_harness::output::{criteria_csv, human_lines, summary_json, write_outputs, Format};
use semiretract_harness::{run, Command, EXIT_FAILURE};

#[derive(Parser)]
#[command(name = "semiretract", version, about = "Invariant means and Hölder retractions for Lipschitzian semigroup actions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for summary.json and CSV tables. Without it the JSON report goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for a left-invariant mean.
    Mean,
    /// Iterate the averaged map from x0.
    Retract {
        /// Also check the retraction identities on sampled points.
        #[arg(long)]
        verify: bool,
    },
    /// Run every applicable criterion.
    Verify,
    /// Only the Hölder check.
    Holder,
    /// Print the fixed-point thresholds and a modulus table.
    Threshold,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Mean => Command::Mean,
        Cmd::Retract { verify } => Command::Retract { verify },
        Cmd::Verify => Command::Verify,
        Cmd::Holder => Command::Holder,
        Cmd::Threshold => Command::Threshold,
    };
    let outcome = match run(command, cli.config.as_deref(), cli.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let lines = human_lines(&outcome.report);
    match &cli.out {
        Some(dir) => {
            match write_outputs(&outcome, dir, cli.format) {
                Ok(files) => {
                    for f in files {
                        eprintln!("wrote {}", f.display());
                    }
                }
                Err(e) => {
                    eprintln!("error: cannot write outputs: {e}");
                    return ExitCode::from(EXIT_FAILURE as u8);
                }
            }
            for l in &lines {
                println!("{l}");
            }
        }
        None => {
            for l in &lines {
                eprintln!("{l}");
            }
            if cli.format.json() {
                print!("{}", summary_json(&outcome.report));
            } else {
                print!("{}", criteria_csv(&outcome.report));
            }
        }
    }
    ExitCode::from(outcome.exit_code() as u8)
}
