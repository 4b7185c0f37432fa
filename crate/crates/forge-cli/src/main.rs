use std::process::ExitCode;

use clap::{Parser, Subcommand};

use forge_cli::commands::{
    fit_knee, fit_law, gen, ingest, optimize, predict, ps, stats, sweep, threshold, validate,
};

/// Workbench for Markov-process pretraining data: matrix synthesis,
/// constrained corpus generation, repetition statistics, induction-head
/// prefix scores, and the phase-transition scaling law.
#[derive(Parser)]
#[command(name = "forge", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a transition matrix from a JSON target config.
    Optimize(optimize::OptimizeArgs),
    /// Generate a corpus with target repetition frequency/reliability.
    Gen(gen::GenArgs),
    /// Repetition statistics of a token stream at one or more context sizes.
    Stats(stats::StatsArgs),
    /// Prefix scores over attention dumps.
    Ps(ps::PsArgs),
    /// Random-attention significance threshold for the prefix score.
    Threshold(threshold::ThresholdArgs),
    /// 3-segment changepoint fit of a PS curve.
    FitKnee(fit_knee::FitKneeArgs),
    /// Log-space scaling-law regression over transition points.
    FitLaw(fit_law::FitLawArgs),
    /// Transition point for a batch/context configuration.
    Predict(predict::PredictArgs),
    /// Grid execution with per-cell artifacts and a summary table.
    Sweep(sweep::SweepArgs),
    /// Check artifact files (formats, stochasticity, dump invariants).
    Validate(validate::ValidateArgs),
    /// Bigram counts and a transition matrix from a token stream.
    Ingest(ingest::IngestArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Optimize(a) => optimize::run(a),
        Cmd::Gen(a) => gen::run(a),
        Cmd::Stats(a) => stats::run(a),
        Cmd::Ps(a) => ps::run(a),
        Cmd::Threshold(a) => threshold::run(a),
        Cmd::FitKnee(a) => fit_knee::run(a),
        Cmd::FitLaw(a) => fit_law::run(a),
        Cmd::Predict(a) => predict::run(a),
        Cmd::Sweep(a) => sweep::run(a),
        Cmd::Validate(a) => validate::run(a),
        Cmd::Ingest(a) => ingest::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
