//! `forge stats`: repetition statistics of a token stream, chunked at one
//! or more context sizes. Reports pooled whole-chunk and second-half
//! numbers, per-chunk quartiles, and the repeated-bigram histogram.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use forge_core::ngram::{
    chunk_repetition_histogram, context_size_sweep, range_repetition_stats, repetition_stats,
    repetition_stats_strict, RepetitionStats,
};

use crate::commands::gen::repetition_json;
use crate::formats;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Token stream (u32 LE).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Context size(s) to chunk at; repeat the flag for a size sweep.
    #[arg(long = "ctx", required = true)]
    pub ctx: Vec<usize>,
    /// Exclude consecutive identical tokens from the repeat counts.
    #[arg(long)]
    pub strict: bool,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &StatsArgs) -> Result<()> {
    let tokens = formats::read_tokens(&args.input)?;
    if tokens.is_empty() {
        bail!("{}: empty token stream", args.input.display());
    }
    let stat_fn = if args.strict { repetition_stats_strict } else { repetition_stats };

    let mut per_ctx = Vec::new();
    let mut sweep_input: Vec<(usize, Vec<&[u32]>)> = Vec::new();
    for &ctx in &args.ctx {
        if ctx < 2 {
            bail!("context size must be at least 2, got {ctx}");
        }
        let chunks: Vec<&[u32]> = tokens.chunks_exact(ctx).collect();
        if chunks.is_empty() {
            bail!("stream of {} tokens has no complete chunk at ctx {ctx}", tokens.len());
        }
        let whole = pool(chunks.iter().map(|c| stat_fn(c)));
        let second_half = pool(
            chunks
                .iter()
                .map(|c| range_repetition_stats(c, ctx / 2..c.len())),
        );
        let histogram = chunk_repetition_histogram(&chunks)?;
        per_ctx.push((ctx, chunks.len(), whole, second_half, histogram));
        sweep_input.push((ctx, chunks));
    }
    let summaries = context_size_sweep(&sweep_input)?;

    let report = json!({
        "input": args.input.display().to_string(),
        "total_tokens": tokens.len(),
        "strict": args.strict,
        "per_context": per_ctx
            .iter()
            .zip(&summaries)
            .map(|((ctx, n, whole, second, hist), s)| {
                json!({
                    "ctx_size": ctx,
                    "chunks": n,
                    "whole": repetition_json(whole),
                    "second_half": repetition_json(second),
                    "frequency_quartiles": dist_json(&s.frequency),
                    "reliability_quartiles": dist_json(&s.reliability),
                    "bigram_repeat_histogram": hist
                        .iter()
                        .map(|(k, v)| json!({"repeats": k, "fraction": v}))
                        .collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>(),
    });

    match &args.out {
        None => println!("{}", serde_json::to_string_pretty(&report)?),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            formats::write_json(&dir.join("report.json"), &report)?;
            let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
            w.write_record([
                "ctx_size",
                "chunks",
                "whole_frequency",
                "whole_reliability",
                "second_half_frequency",
                "second_half_reliability",
                "frequency_q1",
                "frequency_median",
                "frequency_q3",
                "frequency_mean",
                "reliability_q1",
                "reliability_median",
                "reliability_q3",
                "reliability_mean",
            ])?;
            for ((ctx, n, whole, second, _), s) in per_ctx.iter().zip(&summaries) {
                w.write_record([
                    ctx.to_string(),
                    n.to_string(),
                    format!("{}", whole.frequency),
                    format!("{}", whole.reliability),
                    format!("{}", second.frequency),
                    format!("{}", second.reliability),
                    format!("{}", s.frequency.q1),
                    format!("{}", s.frequency.median),
                    format!("{}", s.frequency.q3),
                    format!("{}", s.frequency.mean),
                    format!("{}", s.reliability.q1),
                    format!("{}", s.reliability.median),
                    format!("{}", s.reliability.q3),
                    format!("{}", s.reliability.mean),
                ])?;
            }
            w.flush()?;
            let config = json!({
                "in": args.input.display().to_string(),
                "ctx": args.ctx,
                "strict": args.strict,
            });
            let mut manifest = RunManifest::new("stats", config, vec![]);
            manifest.add_artifact(dir, "report.json")?;
            manifest.add_artifact(dir, "report.csv")?;
            manifest.write(dir)?;
        }
    }
    Ok(())
}

fn dist_json(d: &forge_core::ngram::DistSummary) -> serde_json::Value {
    json!({"q1": d.q1, "median": d.median, "q3": d.q3, "mean": d.mean})
}

fn pool(parts: impl Iterator<Item = RepetitionStats>) -> RepetitionStats {
    let (mut uni, mut bi, mut len) = (0u64, 0u64, 0u64);
    for p in parts {
        uni += p.unigram_rep_count;
        bi += p.bigram_rep_count;
        len += p.token_count;
    }
    let frequency = if len == 0 { 0.0 } else { uni as f64 / len as f64 };
    let p_abab = if len == 0 { 0.0 } else { bi as f64 / len as f64 };
    RepetitionStats {
        frequency,
        reliability: if frequency == 0.0 { 0.0 } else { p_abab / frequency },
        p_abab,
        unigram_rep_count: uni,
        bigram_rep_count: bi,
        token_count: len,
    }
}
