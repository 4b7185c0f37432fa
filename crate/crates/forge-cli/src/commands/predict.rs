//! `forge predict`: transition point for a (batch, context) configuration
//! under updates = T / sqrt(BC), tokens = T * sqrt(BC).

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde_json::json;

use forge_core::law::{predict_transition_tokens, predict_transition_updates, DEFAULT_LAW_T};

use crate::formats;

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Batch size.
    #[arg(long = "B")]
    pub batch_size: f64,
    /// Context size.
    #[arg(long = "C")]
    pub context_size: f64,
    /// Law constant T; defaults to 750000 unless --law supplies a fit.
    #[arg(long = "T")]
    pub t_const: Option<f64>,
    /// law.json from `forge fit-law`; its rounded T is used.
    #[arg(long)]
    pub law: Option<PathBuf>,
}

pub fn run(args: &PredictArgs) -> Result<()> {
    let (t_const, source) = match (args.t_const, &args.law) {
        (Some(_), Some(_)) => bail!("--T and --law are mutually exclusive"),
        (Some(t), None) => (t, "flag".to_string()),
        (None, Some(path)) => {
            let law = formats::read_json(path)?;
            let t = law
                .pointer("/rounded/t_const")
                .and_then(|v| v.as_f64())
                .ok_or_else(|| {
                    anyhow::anyhow!("{}: no rounded.t_const field", path.display())
                })?;
            (t, path.display().to_string())
        }
        (None, None) => (DEFAULT_LAW_T, "default".to_string()),
    };
    if args.batch_size <= 0.0 || args.context_size <= 0.0 || t_const <= 0.0 {
        bail!("batch size, context size, and T must all be positive");
    }
    let report = json!({
        "batch_size": args.batch_size,
        "context_size": args.context_size,
        "t_const": t_const,
        "t_source": source,
        "transition_updates": predict_transition_updates(t_const, args.batch_size, args.context_size),
        "transition_tokens": predict_transition_tokens(t_const, args.batch_size, args.context_size),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
