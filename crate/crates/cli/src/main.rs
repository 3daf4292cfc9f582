//! `mgctm`: train, evaluate and inspect multi-grain clustering topic models.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input or
//! configuration, 3 benchmark finished with failed rows.

mod bench;
mod eval;
mod methods;
mod setup;
mod synth;
mod topics;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mgctm", version, about = "Multi-grain clustering topic model")]
struct Cli {
    /// Random seed; overrides the seeds in --config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the per-document work (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON run configuration with optional `train`, `lda`, `kmeans` and
    /// `synth` sections. Command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and write it with its fit report.
    Train(train::TrainArgs),
    /// Score a clustering against ground-truth labels.
    Eval(eval::EvalArgs),
    /// Print the most probable words of each topic.
    Topics(topics::TopicsArgs),
    /// Sample a labelled corpus from known parameters.
    Synth(synth::SynthArgs),
    /// Compare methods over several seeds and write a delimited report.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = setup::Globals::new(cli.seed, cli.threads, cli.config.as_deref()).and_then(|globals| match cli.command {
        Command::Train(args) => train::run(&globals, args),
        Command::Eval(args) => eval::run(&globals, args),
        Command::Topics(args) => topics::run(&args),
        Command::Synth(args) => synth::run(&globals, args),
        Command::Bench(args) => bench::run(&globals, args),
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(setup::exit_code(&err))
        }
    }
}
