//! `forge validate`: offline artifact checking. Recognizes matrix files by
//! magic, attention dumps / manifests / curve metadata by JSON shape, CSV
//! tables by header, and token streams by extension; prints one line per
//! file and exits nonzero if anything failed.

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::Args;

use crate::formats;

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Artifacts to check.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Vocabulary size for token-stream range checks.
    #[arg(long)]
    pub vocab: Option<usize>,
}

pub fn run(args: &ValidateArgs) -> Result<()> {
    let mut failures = 0;
    for path in &args.paths {
        match check_one(path, args.vocab) {
            Ok(kind) => println!("OK   {} ({kind})", path.display()),
            Err(e) => {
                failures += 1;
                println!("FAIL {}: {e:#}", path.display());
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} artifacts failed validation", args.paths.len());
    }
    Ok(())
}

fn check_one(path: &Path, vocab: Option<usize>) -> Result<String> {
    let head = {
        let bytes = std::fs::read(path)?;
        if bytes.len() >= 4 { bytes[0..4].to_vec() } else { bytes }
    };
    if head == formats::MATRIX_MAGIC[..] {
        let m = formats::read_matrix(path)?;
        return Ok(format!("matrix, vocab {}", m.vocab_size()));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => check_json(path),
        Some("csv") => check_csv(path, vocab),
        Some("bin") => {
            let tokens = formats::read_tokens(path)?;
            if let Some(v) = vocab {
                for (i, &t) in tokens.iter().enumerate() {
                    if t as usize >= v {
                        bail!("token {t} at position {i} outside vocab {v}");
                    }
                }
            }
            Ok(format!("token stream, {} tokens", tokens.len()))
        }
        _ => bail!("unrecognized artifact type"),
    }
}

fn check_json(path: &Path) -> Result<String> {
    let value = formats::read_json(path)?;
    let obj = match value.as_object() {
        Some(o) => o,
        None => return Ok("json (no schema applied)".into()),
    };
    if obj.contains_key("attn") {
        let dump = formats::read_attention_dump(path)?;
        return Ok(format!(
            "attention dump, step {}, {} heads, context {}",
            dump.step,
            dump.heads.len(),
            dump.heads[0].attn.context()
        ));
    }
    if obj.contains_key("command") && obj.contains_key("artifacts") {
        return check_manifest(path, obj);
    }
    if obj.len() == 2 && obj.contains_key("batch_size") && obj.contains_key("context_size") {
        let _: formats::CurveMeta = serde_json::from_value(value.clone())?;
        return Ok("curve metadata".into());
    }
    Ok("json (no schema applied)".into())
}

/// Re-hashes every artifact a manifest lists; a drifted or missing file
/// fails by name.
fn check_manifest(
    path: &Path,
    obj: &serde_json::Map<String, serde_json::Value>,
) -> Result<String> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let artifacts = obj["artifacts"]
        .as_object()
        .ok_or_else(|| anyhow::anyhow!("artifacts field is not an object"))?;
    let mut checked = 0;
    for (name, expected) in artifacts {
        let expected = expected
            .as_str()
            .ok_or_else(|| anyhow::anyhow!("artifact {name}: hash is not a string"))?;
        let actual = formats::sha256_hex(&dir.join(name))?;
        if actual != expected {
            bail!("artifact {name}: sha256 {actual} != recorded {expected}");
        }
        checked += 1;
    }
    Ok(format!("manifest, {checked} artifacts verified"))
}

fn check_csv(path: &Path, vocab: Option<usize>) -> Result<String> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
    drop(r);
    let names: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    match names.as_slice() {
        ["step", "best_ps"] => {
            let curve = formats::read_ps_curve(path, None)?;
            Ok(format!("ps curve, {} points", curve.points.len()))
        }
        ["batch_size", "context_size", "transition_updates"] => {
            let obs = formats::read_observations(path)?;
            Ok(format!("law observations, {} rows", obs.len()))
        }
        ["src", "dst", "count"] => {
            // Without a declared vocab, infer it from the largest ID.
            let v = match vocab {
                Some(v) => v,
                None => {
                    let mut r = csv::Reader::from_path(path)?;
                    let mut max_id = 0u32;
                    for rec in r.records() {
                        let rec = rec?;
                        for i in 0..2 {
                            let id: u32 = rec
                                .get(i)
                                .ok_or_else(|| anyhow::anyhow!("short record"))?
                                .parse()?;
                            max_id = max_id.max(id);
                        }
                    }
                    max_id as usize + 1
                }
            };
            let counts = formats::read_bigram_counts(path, v)?;
            Ok(format!(
                "bigram counts, vocab {}, {} pairs",
                counts.vocab_size(),
                counts.total()
            ))
        }
        _ => {
            // Generic CSV: reject ragged rows but apply no schema.
            let mut r = csv::Reader::from_path(path)?;
            let mut rows = 0usize;
            for rec in r.records() {
                let rec = rec?;
                if rec.len() != headers.len() {
                    bail!("row {} has {} fields, header has {}", rows + 2, rec.len(), headers.len());
                }
                rows += 1;
            }
            Ok(format!("csv (no schema applied), {rows} rows"))
        }
    }
}
