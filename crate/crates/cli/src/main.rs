//! `rankfield`: graph ingestion, synthetic generation, PageRank, degree-class
//! mean-field analysis, distribution statistics, and search-rank prediction
//! from one binary.
//!
//! Every subcommand emits a JSON summary echoing its effective
//! configuration. Tabular results are CSV with a header row. Exit codes:
//! 0 success, 1 compute/input failure (JSON error object on stderr),
//! 2 usage error.

use clap::Parser;

mod args;
mod commands;
mod output;
mod pipeline;
mod reproduce;

#[derive(Parser)]
#[command(
    name = "rankfield",
    version,
    about = "Directed-graph PageRank analytics and rank prediction"
)]
enum Cli {
    /// Read an edge list (plain or gzip), remap ids densely, and re-emit it.
    Ingest(commands::IngestArgs),
    /// Generate a seeded configuration-model graph.
    Generate(commands::GenerateArgs),
    /// Compute PageRank by power iteration.
    Pagerank(commands::PagerankArgs),
    /// Solve the degree-class mean-field recursion and compare with the
    /// empirical class averages.
    Meanfield(commands::MeanfieldArgs),
    /// Within-class fluctuation analysis: coefficient of variation per
    /// in-degree bin, recursion vs closed form.
    Fluctuations(commands::FluctuationsArgs),
    /// Distribution and correlation statistics of a graph's PageRank.
    Stats(commands::StatsArgs),
    /// Rank-ordered PageRank curve and its log-log tail slope.
    Zipf(commands::ZipfArgs),
    /// Predict the expected position in an n-result list from in-degree.
    Predict(commands::PredictArgs),
    /// In-links required to reach a target position in an n-result list.
    Invert(commands::InvertArgs),
    /// Fit the rank-curve amplitude from observed (k_in, hits, rank) rows.
    Calibrate(commands::CalibrateArgs),
    /// Full benchmark pipeline: generate, solve, analyze, score, and write
    /// every figure-ready CSV plus a metrics summary.
    Reproduce(reproduce::ReproduceArgs),
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let result = match cli {
        Cli::Ingest(a) => commands::ingest(a),
        Cli::Generate(a) => commands::generate(a),
        Cli::Pagerank(a) => commands::pagerank(a),
        Cli::Meanfield(a) => commands::meanfield(a),
        Cli::Fluctuations(a) => commands::fluctuations(a),
        Cli::Stats(a) => commands::stats(a),
        Cli::Zipf(a) => commands::zipf(a),
        Cli::Predict(a) => commands::predict(a),
        Cli::Invert(a) => commands::invert(a),
        Cli::Calibrate(a) => commands::calibrate(a),
        Cli::Reproduce(a) => reproduce::run(a),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{err:#}") }));
            std::process::ExitCode::FAILURE
        }
    }
}
