//! `forge fit-law`: log-space OLS of transition updates against batch and
//! context size, with the square-root-rounded refit and the predicted vs
//! observed agreement table.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use forge_core::law::{
    fit_scaling_law, predict_transition_tokens, predict_transition_updates, predicted_vs_observed,
};

use crate::formats;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct FitLawArgs {
    /// Observations CSV (`batch_size,context_size,transition_updates`).
    #[arg(long)]
    pub observations: PathBuf,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &FitLawArgs) -> Result<()> {
    let obs = formats::read_observations(&args.observations)?;
    let fit = fit_scaling_law(&obs)?;
    let agreement = predicted_vs_observed(&obs, fit.rounded_t_const)?;
    let report = json!({
        "n": fit.n,
        "raw": {
            "alpha": fit.alpha,
            "beta": fit.beta,
            "gamma": fit.gamma,
            "t_const": fit.t_const,
        },
        "rounded": {
            "alpha": fit.rounded_alpha,
            "beta": -0.5,
            "gamma": -0.5,
            "t_const": fit.rounded_t_const,
        },
        "agreement": {
            "r_raw": agreement.r_raw,
            "p_raw": agreement.p_raw,
            "r_log": agreement.r_log,
            "p_log": agreement.p_log,
        },
    });
    match &args.out {
        None => println!("{}", serde_json::to_string_pretty(&report)?),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            formats::write_json(&dir.join("law.json"), &report)?;
            let mut w = csv::Writer::from_path(dir.join("predictions.csv"))?;
            w.write_record([
                "batch_size",
                "context_size",
                "observed_updates",
                "predicted_updates",
                "observed_tokens",
                "predicted_tokens",
            ])?;
            for o in &obs {
                let pu = predict_transition_updates(fit.rounded_t_const, o.batch_size, o.context_size);
                let pt = predict_transition_tokens(fit.rounded_t_const, o.batch_size, o.context_size);
                w.write_record([
                    format!("{}", o.batch_size),
                    format!("{}", o.context_size),
                    format!("{}", o.transition_updates),
                    format!("{pu}"),
                    format!("{}", o.transition_updates * o.batch_size * o.context_size),
                    format!("{pt}"),
                ])?;
            }
            w.flush()?;
            let config = json!({"observations": args.observations.display().to_string()});
            let mut manifest = RunManifest::new("fit-law", config, vec![]);
            manifest.add_artifact(dir, "law.json")?;
            manifest.add_artifact(dir, "predictions.csv")?;
            manifest.write(dir)?;
        }
    }
    Ok(())
}
