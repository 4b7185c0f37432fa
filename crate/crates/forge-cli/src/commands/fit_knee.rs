//! `forge fit-knee`: continuous 3-segment least-squares fit of a PS curve
//! in log10(step); the first knot is the transition point. A flat curve or
//! one without a slope gain is reported as a no-transition finding (exit 0),
//! while malformed input stays a hard error.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use forge_core::law::{fit_pwlf3, twu_transform, FitKneeOptions, PsCurve, PwlfFit};
use forge_core::Error;

use crate::formats;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct FitKneeArgs {
    /// PS curve CSV (`step,best_ps`).
    #[arg(long)]
    pub curve: PathBuf,
    /// JSON metadata sidecar with batch/context sizes; defaults to B=C=1.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Minimum slope gain (PS per log10 decade) for an accepted transition.
    #[arg(long, default_value_t = 0.05)]
    pub min_slope_gain: f64,
    /// Require the post-onset maximum PS to exceed this floor (e.g. the
    /// random-attention threshold for the training context size).
    #[arg(long)]
    pub ps_floor: Option<f64>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &FitKneeArgs) -> Result<()> {
    let curve = formats::read_ps_curve(&args.curve, args.meta.as_deref())?;
    let opts = FitKneeOptions {
        min_slope_gain: args.min_slope_gain,
        ps_floor: args.ps_floor,
    };
    let report = match fit_pwlf3(&curve, &opts) {
        Ok(fit) => fit_json(&curve, &fit),
        Err(Error::NoTransition(reason)) => json!({
            "status": "no-transition",
            "reason": reason,
            "batch_size": curve.batch_size,
            "context_size": curve.context_size,
        }),
        Err(e) => return Err(e.into()),
    };
    match &args.out {
        None => println!("{}", serde_json::to_string_pretty(&report)?),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            formats::write_json(&dir.join("knee.json"), &report)?;
            let config = json!({
                "curve": args.curve.display().to_string(),
                "meta": args.meta.as_ref().map(|p| p.display().to_string()),
                "min_slope_gain": args.min_slope_gain,
                "ps_floor": args.ps_floor,
            });
            let mut manifest = RunManifest::new("fit-knee", config, vec![]);
            manifest.add_artifact(dir, "knee.json")?;
            manifest.write(dir)?;
        }
    }
    Ok(())
}

fn fit_json(curve: &PsCurve, fit: &PwlfFit) -> serde_json::Value {
    let bc = (curve.batch_size * curve.context_size) as f64;
    let step = fit.transition_step();
    let twu_points = twu_transform(curve);
    json!({
        "status": "fit",
        "batch_size": curve.batch_size,
        "context_size": curve.context_size,
        "knots_log10": fit.knots,
        "coef": fit.coef,
        "slopes": fit.slopes,
        "sse": fit.sse,
        "transition_step": step,
        "transition_updates": step,
        "transition_tokens": step * bc,
        "transition_twu": step * bc.sqrt(),
        "twu_axis_range_log10": [
            twu_points.first().map(|p| p.0.log10()),
            twu_points.last().map(|p| p.0.log10()),
        ],
    })
}
