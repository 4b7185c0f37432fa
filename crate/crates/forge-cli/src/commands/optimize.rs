//! `forge optimize`: synthesize a transition matrix from a JSON target
//! config; emits `matrix.iftm` (+ JSON sidecar), `report.json`,
//! `report.csv` (per-step loss terms), and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use forge_core::markov::TransitionMatrix;
use forge_core::optim::{build_minus_d_matrix, matrix_stats, optimize, MatrixStats};

use crate::config::{load_config, OptimizeConfig};
use crate::formats;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// JSON config mirroring the optimizer targets.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &OptimizeArgs) -> Result<()> {
    let cfg: OptimizeConfig = load_config(&args.config)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let stats = build_into_dir(&cfg, &args.out)?;
    println!(
        "wrote {} (H {:.4} bits, KL {:.2e}, within {:.4}, across {:.4})",
        args.out.join("matrix.iftm").display(),
        stats.conditional_entropy,
        stats.marginal_kl,
        stats.within_similarity,
        stats.across_similarity,
    );
    Ok(())
}

/// Builds one matrix (optimized or identical-rows) into `dir`. Shared with
/// the sweep command; returns the final stats for summary rows.
pub fn build_into_dir(cfg: &OptimizeConfig, dir: &Path) -> Result<MatrixStats> {
    let targets = cfg.to_targets()?;
    let (matrix, stats, trace): (TransitionMatrix, MatrixStats, Option<Vec<_>>) =
        if cfg.identical_rows {
            let m = build_minus_d_matrix(&cfg.marginal_spec()?)?;
            let s = matrix_stats(&m, &targets)?;
            (m, s, None)
        } else {
            let (m, report) = optimize(&targets)?;
            (m, report.final_stats, Some(report.trace))
        };

    formats::write_matrix(&dir.join("matrix.iftm"), &matrix)?;
    formats::write_json(
        &dir.join("matrix.iftm.json"),
        &json!({
            "vocab_size": matrix.vocab_size(),
            "format": {"magic": "IFTM", "version": formats::MATRIX_VERSION, "element": "f64le"},
            "built_by": if cfg.identical_rows { "identical-rows" } else { "optimizer" },
            "config": serde_json::to_value(cfg)?,
        }),
    )?;

    if let Some(trace) = &trace {
        let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
        w.write_record([
            "step",
            "total",
            "marginal_kl",
            "entropy_gap_sq",
            "peakedness",
            "within_gap_sq",
            "across_gap_sq",
        ])?;
        for (i, t) in trace.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{}", t.total),
                format!("{}", t.marginal_kl),
                format!("{}", t.entropy_gap_sq),
                format!("{}", t.peakedness),
                format!("{}", t.within_gap_sq),
                format!("{}", t.across_gap_sq),
            ])?;
        }
        w.flush()?;
    }

    formats::write_json(&dir.join("report.json"), &report_json(cfg, &targets, &stats, &trace)?)?;

    let mut manifest = RunManifest::new("optimize", serde_json::to_value(cfg)?, vec![cfg.seed]);
    manifest.add_artifact(dir, "matrix.iftm")?;
    manifest.add_artifact(dir, "matrix.iftm.json")?;
    manifest.add_artifact(dir, "report.json")?;
    if trace.is_some() {
        manifest.add_artifact(dir, "report.csv")?;
    }
    manifest.write(dir)?;
    Ok(stats)
}

fn report_json(
    cfg: &OptimizeConfig,
    targets: &forge_core::optim::MatrixTargets,
    stats: &MatrixStats,
    trace: &Option<Vec<forge_core::optim::LossTerms>>,
) -> Result<serde_json::Value> {
    let trace_summary = trace.as_ref().map(|t| {
        json!({
            "steps": t.len(),
            "initial_total": t.first().map(|x| x.total),
            "final_total": t.last().map(|x| x.total),
        })
    });
    Ok(json!({
        "config": serde_json::to_value(cfg)?,
        "resolved_targets": {
            "entropy_target": targets.entropy_target,
            "within_target": targets.within_target,
            "across_target": targets.across_target,
            "steps": targets.steps,
            "learning_rate": targets.learning_rate,
            "weights": {
                "marginal": targets.weights.marginal,
                "entropy": targets.weights.entropy,
                "peakedness": targets.weights.peakedness,
                "within": targets.weights.within,
                "across": targets.weights.across,
            },
        },
        "final_stats": stats_json(stats),
        "loss_trace": trace_summary,
    }))
}

pub fn stats_json(s: &MatrixStats) -> serde_json::Value {
    json!({
        "conditional_entropy_bits": s.conditional_entropy,
        "marginal_kl_bits": s.marginal_kl,
        "within_similarity": s.within_similarity,
        "across_similarity": s.across_similarity,
        "mean_row_max": s.mean_row_max,
    })
}
