//! `forge ps`: prefix scores over attention dumps. One dump gives a
//! per-head table and the best score; several dumps (plus batch/context
//! metadata) additionally assemble a `step,best_ps` curve for the knee fit.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use forge_core::induction::{prefix_score, PsMode};
use forge_core::law::PsCurve;

use crate::formats;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct PsArgs {
    /// Attention dump file(s); repeat the flag for a checkpoint series.
    #[arg(long = "dump", required = true)]
    pub dumps: Vec<PathBuf>,
    /// "consistent" (L-1 second-copy rows) or "literal" (all L rows).
    #[arg(long, default_value = "consistent")]
    pub mode: String,
    /// Training batch size (curve metadata).
    #[arg(long)]
    pub batch_size: Option<u64>,
    /// Training context size (curve metadata).
    #[arg(long)]
    pub context_size: Option<u64>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<PsMode> {
    match s {
        "consistent" => Ok(PsMode::Consistent),
        "literal" => Ok(PsMode::Literal),
        other => bail!("unknown mode {other:?} (consistent | literal)"),
    }
}

pub fn run(args: &PsArgs) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let mut dump_reports = Vec::new();
    let mut head_rows: Vec<(u64, u32, u32, f64)> = Vec::new();
    let mut points: Vec<(u64, f64)> = Vec::new();
    for path in &args.dumps {
        let dump = formats::read_attention_dump(path)?;
        let mut heads = Vec::new();
        let mut best = f64::NEG_INFINITY;
        for h in &dump.heads {
            let ps = prefix_score(&h.attn, mode)?;
            best = best.max(ps);
            head_rows.push((dump.step, h.layer, h.head, ps));
            heads.push(json!({"layer": h.layer, "head": h.head, "ps": ps}));
        }
        points.push((dump.step, best));
        dump_reports.push(json!({
            "file": path.display().to_string(),
            "step": dump.step,
            "context": dump.heads[0].attn.context(),
            "heads": heads,
            "best_ps": best,
        }));
    }

    let curve = match (args.batch_size, args.context_size) {
        (Some(b), Some(c)) => Some(PsCurve::new(b, c, points.clone())?),
        (None, None) => None,
        _ => bail!("--batch-size and --context-size must be given together"),
    };

    let report = json!({
        "mode": args.mode,
        "dumps": dump_reports,
        "curve_points": points.iter().map(|(s, p)| json!([s, p])).collect::<Vec<_>>(),
    });

    match &args.out {
        None => println!("{}", serde_json::to_string_pretty(&report)?),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            formats::write_json(&dir.join("report.json"), &report)?;
            let mut w = csv::Writer::from_path(dir.join("heads.csv"))?;
            w.write_record(["step", "layer", "head", "ps"])?;
            for (step, layer, head, ps) in &head_rows {
                w.write_record([
                    step.to_string(),
                    layer.to_string(),
                    head.to_string(),
                    format!("{ps}"),
                ])?;
            }
            w.flush()?;
            let config = json!({
                "dumps": args.dumps.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                "mode": args.mode,
                "batch_size": args.batch_size,
                "context_size": args.context_size,
            });
            let mut manifest = RunManifest::new("ps", config, vec![]);
            manifest.add_artifact(dir, "report.json")?;
            manifest.add_artifact(dir, "heads.csv")?;
            if let Some(curve) = &curve {
                formats::write_ps_curve(&dir.join("curve.csv"), &dir.join("curve.json"), curve)?;
                manifest.add_artifact(dir, "curve.csv")?;
                manifest.add_artifact(dir, "curve.json")?;
            }
            manifest.write(dir)?;
        }
    }
    Ok(())
}
