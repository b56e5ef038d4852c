//! Command-line driver for the meta-path recommendation engine.

mod commands;
mod config;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "pathrec",
    version,
    about = "Meta-path guided self-supervised recommender: ingest, analyze, train, evaluate, ablate, sweep"
)]
struct Cli {
    /// Cap worker threads; 1 guarantees byte-identical output across runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a relation directory, filter, split, and write a dataset bundle.
    Ingest(commands::IngestArgs),
    /// Tabulate interaction probability across link-score bins for a meta-path.
    Analyze(commands::AnalyzeArgs),
    /// Train a model on an ingested bundle.
    Train(commands::TrainArgs),
    /// Rank the catalog with a trained checkpoint and report Recall/NDCG.
    Eval(commands::EvalArgs),
    /// Train loss-component ablations across seeds and tabulate metrics.
    Ablate(commands::AblateArgs),
    /// Sweep one axis (layers, theta-neg, meta-path) and tabulate metrics.
    Sweep(commands::SweepArgs),
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        pathrec::configure_threads(threads)?;
    }
    match cli.cmd {
        Cmd::Ingest(args) => commands::ingest(args),
        Cmd::Analyze(args) => commands::analyze(args),
        Cmd::Train(args) => commands::train(args),
        Cmd::Eval(args) => commands::eval(args),
        Cmd::Ablate(args) => commands::ablate(args),
        Cmd::Sweep(args) => commands::sweep(args),
    }
}
