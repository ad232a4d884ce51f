use clap::{Args, Parser, Subcommand};
use gradflow::harness::{self, CmdStatus};
use std::path::PathBuf;
use std::process::ExitCode;

/// Metric gradient flows, mechanical optimizers, and Laplace model evidence
/// for small dense networks.
#[derive(Parser)]
#[command(name = "gradflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed key of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory the report files are written into.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Suppresses the stdout summary; files are still written.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Run configuration files, one per model; pass the flag twice.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Overrides the seed key of both configurations.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory the report files are written into.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Suppresses the stdout summary; files are still written.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Trains a network along a metric gradient flow and writes the trajectory.
    Train(CommonArgs),
    /// Laplace log evidence of an objective under a Gaussian prior.
    Evidence(CommonArgs),
    /// Compares the evidence of two configured models.
    Compare(CompareArgs),
    /// Cross-checks reverse-mode gradients against finite differences.
    Gradcheck(CommonArgs),
    /// Integrates a flow with a known closed form and reports the deviation.
    OracleCheck(CommonArgs),
    /// Monte Carlo census of minima among random critical points.
    SaddleCensus(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => harness::cmd_train(&a.config, a.seed, &a.out, a.quiet),
        Command::Evidence(a) => harness::cmd_evidence(&a.config, a.seed, &a.out, a.quiet),
        Command::Compare(a) => {
            if a.config.len() != 2 {
                eprintln!(
                    "error: compare needs exactly two --config files, got {}",
                    a.config.len()
                );
                return ExitCode::from(1);
            }
            harness::cmd_compare(&a.config[0], &a.config[1], a.seed, &a.out, a.quiet)
        }
        Command::Gradcheck(a) => harness::cmd_gradcheck(&a.config, a.seed, &a.out, a.quiet),
        Command::OracleCheck(a) => harness::cmd_oracle_check(&a.config, a.seed, &a.out, a.quiet),
        Command::SaddleCensus(a) => harness::cmd_saddle_census(&a.config, a.seed, &a.out, a.quiet),
    };
    match result {
        Ok(CmdStatus::Ok) => ExitCode::SUCCESS,
        Ok(CmdStatus::CheckFailed) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
