//! Runs an experiment config the same way the command-line tool does.
//!
//! cargo run --release --example run_config -- examples/configs/sigma_zipf.json out/

use std::path::PathBuf;

use aoi_select::experiment::{run_experiment, validate_config, RunOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "examples/configs/markov_analyze.json".into()));
    let cfg = match validate_config(&path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let opts = RunOptions {
        out: args.next().map(PathBuf::from),
        ..RunOptions::default()
    };
    match run_experiment(&cfg, &opts) {
        Ok(summary) => println!("wrote {:?} to {}", summary.files, summary.output_dir.display()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(3);
        }
    }
}
