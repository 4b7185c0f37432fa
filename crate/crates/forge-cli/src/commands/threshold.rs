//! `forge threshold`: the random-attention significance threshold — the
//! (1 - alpha) quantile of prefix scores under per-row uniform-Dirichlet
//! causal attention.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use forge_core::induction::{random_attention_threshold, ThresholdConfig};

use crate::formats;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Training context size (the probe uses half, capped at 50).
    #[arg(long)]
    pub ctx: usize,
    /// Significance level.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &ThresholdArgs) -> Result<()> {
    let cfg = ThresholdConfig {
        context_size: args.ctx,
        alpha_level: args.alpha,
        num_samples: args.samples,
        seed: args.seed,
    };
    let threshold = random_attention_threshold(&cfg)?;
    let report = json!({
        "context_size": args.ctx,
        "scored_half_length": (args.ctx / 2).min(50),
        "alpha_level": args.alpha,
        "num_samples": args.samples,
        "seed": args.seed,
        "threshold": threshold,
        "aggregation": "mean attention at the induction offset over all second-half rows, \
                        divided by the half length",
    });
    match &args.out {
        None => println!("{}", serde_json::to_string_pretty(&report)?),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            formats::write_json(&dir.join("threshold.json"), &report)?;
            let config = json!({
                "ctx": args.ctx,
                "alpha": args.alpha,
                "samples": args.samples,
                "seed": args.seed,
            });
            let mut manifest = RunManifest::new("threshold", config, vec![args.seed]);
            manifest.add_artifact(dir, "threshold.json")?;
            manifest.write(dir)?;
        }
    }
    Ok(())
}
