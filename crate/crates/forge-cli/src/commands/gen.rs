//! `forge gen`: generate a chunked corpus from a matrix with target
//! second-half repetition frequency (alpha) and reliability (beta); emits
//! `corpus.bin` (flat u32 LE), `report.json` (spec + measurements), and
//! `manifest.json`. `--p-nr` selects a repetition-free / repetition-bearing
//! chunk mixture from an oversampled pool.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use forge_core::corpus::{
    generate_corpus, measure_chunks, select_nr_mixture, Chunk, CorpusSpec, GenerationStats,
    NrMixSpec,
};
use forge_core::markov::TransitionMatrix;
use forge_core::ngram::RepetitionStats;
use forge_core::rng::derive_seed;

use crate::formats;
use crate::manifest::RunManifest;

/// Chunk indices run 0..pool, so the mixture-selection stream can never
/// collide with a chunk stream.
const MIX_STREAM: u64 = u64::MAX;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Transition matrix file (IFTM).
    #[arg(long)]
    pub matrix: PathBuf,
    /// Target second-half repetition frequency P(AB...A), in [0, 1].
    #[arg(long)]
    pub alpha: f64,
    /// Target second-half repetition reliability P(B|AB...A), in [0, 1].
    #[arg(long)]
    pub beta: f64,
    /// Tokens per chunk (even, >= 4).
    #[arg(long)]
    pub ctx: usize,
    /// Number of chunks to emit.
    #[arg(long)]
    pub chunks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Proportion of repetition-free chunks to mix in (selects from an
    /// oversampled pool).
    #[arg(long)]
    pub p_nr: Option<f64>,
    /// Pool oversampling factor used with --p-nr.
    #[arg(long, default_value_t = 2.0)]
    pub pool_factor: f64,
}

pub fn run(args: &GenArgs) -> Result<()> {
    let matrix = formats::read_matrix(&args.matrix)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let spec = CorpusSpec {
        ctx_size: args.ctx,
        alpha: args.alpha,
        beta: args.beta,
        num_chunks: args.chunks,
        seed: args.seed,
    };
    let stats = generate_into_dir(&matrix, &spec, args.p_nr, args.pool_factor, &args.out)?;
    println!(
        "wrote {} ({} chunks, second-half frequency {:.4}, reliability {:.4}, fallback {:.3}%)",
        args.out.join("corpus.bin").display(),
        stats.num_chunks,
        stats.second_half.frequency,
        stats.second_half.reliability,
        100.0 * stats.fallback_count as f64 / stats.total_tokens as f64,
    );
    Ok(())
}

/// Generates one corpus into `dir`. Shared with the sweep command.
pub fn generate_into_dir(
    matrix: &TransitionMatrix,
    spec: &CorpusSpec,
    p_nr: Option<f64>,
    pool_factor: f64,
    dir: &Path,
) -> Result<GenerationStats> {
    let (chunks, stats) = match p_nr {
        None => generate_corpus(matrix, spec)?,
        Some(p) => {
            if pool_factor < 1.0 {
                bail!("pool factor must be >= 1");
            }
            let pool_size = (spec.num_chunks as f64 * pool_factor).ceil() as usize;
            let pool_spec = CorpusSpec {
                num_chunks: pool_size,
                ..spec.clone()
            };
            let (pool, _) = generate_corpus(matrix, &pool_spec)?;
            let token_view: Vec<&[u32]> = pool.iter().map(|c| c.tokens.as_slice()).collect();
            let picked = select_nr_mixture(
                &token_view,
                &NrMixSpec {
                    p_nr: p,
                    num_output: spec.num_chunks,
                    seed: derive_seed(spec.seed, MIX_STREAM),
                },
            )?;
            let chunks: Vec<Chunk> = picked.iter().map(|&i| pool[i].clone()).collect();
            let stats = measure_chunks(matrix, spec, &chunks)?;
            (chunks, stats)
        }
    };

    let flat: Vec<u32> = chunks.iter().flat_map(|c| c.tokens.iter().copied()).collect();
    formats::write_tokens(&dir.join("corpus.bin"), &flat)?;
    formats::write_json(&dir.join("report.json"), &report_json(spec, p_nr, &stats))?;

    let config = json!({
        "ctx_size": spec.ctx_size,
        "alpha": spec.alpha,
        "beta": spec.beta,
        "num_chunks": spec.num_chunks,
        "seed": spec.seed,
        "p_nr": p_nr,
        "pool_factor": if p_nr.is_some() { Some(pool_factor) } else { None },
    });
    let mut manifest = RunManifest::new("gen", config, vec![spec.seed]);
    manifest.add_artifact(dir, "corpus.bin")?;
    manifest.add_artifact(dir, "report.json")?;
    manifest.write(dir)?;
    Ok(stats)
}

fn report_json(spec: &CorpusSpec, p_nr: Option<f64>, stats: &GenerationStats) -> serde_json::Value {
    json!({
        "spec": {
            "ctx_size": spec.ctx_size,
            "alpha": spec.alpha,
            "beta": spec.beta,
            "num_chunks": spec.num_chunks,
            "seed": spec.seed,
            "p_nr": p_nr,
        },
        "calibrated_alpha": stats.calibrated_alpha,
        "calibrated_beta": stats.calibrated_beta,
        "branch_note": "fresh draws in the repeat branch condition on the current row; \
                        branch gates are drawn every second-half step",
        "num_chunks": stats.num_chunks,
        "total_tokens": stats.total_tokens,
        "fallback_count": stats.fallback_count,
        "fallback_fraction": stats.fallback_count as f64 / stats.total_tokens as f64,
        "whole": repetition_json(&stats.whole),
        "second_half": repetition_json(&stats.second_half),
    })
}

pub fn repetition_json(s: &RepetitionStats) -> serde_json::Value {
    json!({
        "frequency": s.frequency,
        "reliability": s.reliability,
        "p_abab": s.p_abab,
        "unigram_rep_count": s.unigram_rep_count,
        "bigram_rep_count": s.bigram_rep_count,
        "token_count": s.token_count,
    })
}
