mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Deformation datasets by incremental FEM, and neural estimation of full
/// displacement fields from a few observed vertices.
#[derive(Debug, Parser)]
#[command(name = "deformest", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in profile: rpp1-paper, liver1-paper, rpp1-desk, rpp6-desk.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Overrides the session and training seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sampling and evaluation (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "DEFORMEST_OUT", default_value = "out")]
    pub out: PathBuf,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the configured mesh and write `mesh.tmesh`.
    Mesh,
    /// Run the FEM for every sampling target and write `dataset.dfds`.
    Sample {
        /// Also write `dataset.csv`.
        #[arg(long)]
        csv: bool,
    },
    /// Train one network on a whole dataset and write `model.json`.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Repeated k-fold cross-validation; writes the report, CSVs and a VTK of the worst test sample.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// Also write every test prediction to `predictions.csv`.
        #[arg(long)]
        predictions: bool,
    },
    /// Estimate the full field from observation displacements (CSV of `x,y,z` rows, simulation units).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        /// Mesh file for the VTK output (default: the configured mesh).
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Full pipeline (mesh, sample, eval, train) into `<out>/<profile>/`.
    Repro,
}

/// Bad command-line input; exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<deformest::Error>() {
            return if e.is_validation() { 1 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            eprintln!("exit status {code} ({})", if code == 1 { "validation" } else { "runtime" });
            ExitCode::from(code)
        }
    }
}
