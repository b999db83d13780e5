use std::path::PathBuf;
use std::process::ExitCode;

use aoi_select::experiment::{self, RunOptions};
use aoi_select::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aoi-select", version, about = "Client selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Check a config file and print its resolved form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the analysis of the optimal (or monotone) chain as JSON.
    Markov {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        mprime: usize,
        #[arg(long)]
        monotone: bool,
    },
}

const CONFIG_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AOI_SELECT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
            seed_override,
        } => {
            let cfg = match experiment::validate_config(&config) {
                Ok(cfg) => cfg,
                Err(e) => return fail(&e.into()),
            };
            let opts = RunOptions {
                out,
                threads,
                seed_override,
            };
            match experiment::run_experiment(&cfg, &opts) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("{}", summary.output_dir.join(f).display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { config } => match experiment::validate_config(&config) {
            Ok(cfg) => {
                println!("{}", cfg.to_json());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e.into()),
        },
        Command::Markov {
            n,
            m,
            mprime,
            monotone,
        } => match experiment::markov_report(n, m, mprime, monotone) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InfeasibleCalibration { .. } => {
            ExitCode::from(CONFIG_ERROR)
        }
        _ => ExitCode::from(RUNTIME_ERROR),
    }
}
