//! `forge ingest`: bigram counts and a row-normalized transition matrix
//! from a token stream. `--truncate K` reduces the vocabulary to the top
//! K-1 types by frequency plus an overflow ID (K-1); `--sep` marks a
//! document separator that breaks bigram accumulation.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use forge_core::ngram::{ingest_bigram_counts, truncate_vocabulary};

use crate::formats;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Token stream: u32 LE (.bin) or whitespace-separated ASCII integers.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// "bin" or "text"; default inferred from the extension.
    #[arg(long)]
    pub format: Option<String>,
    /// Reduce the vocabulary to this many IDs (top K-1 types + overflow).
    #[arg(long)]
    pub truncate: Option<usize>,
    /// Document-separator token ID in the input stream.
    #[arg(long)]
    pub sep: Option<u32>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &IngestArgs) -> Result<()> {
    let is_bin = match args.format.as_deref() {
        Some("bin") => true,
        Some("text") => false,
        Some(other) => bail!("unknown format {other:?} (bin | text)"),
        None => args.input.extension().and_then(|e| e.to_str()) == Some("bin"),
    };
    let raw = if is_bin {
        formats::read_tokens(&args.input)?
    } else {
        formats::read_tokens_text(&args.input)?
    };
    if raw.is_empty() {
        bail!("{}: empty token stream", args.input.display());
    }

    let (stream, vocab_size, separator, kept) = match args.truncate {
        Some(k) => {
            let t = truncate_vocabulary(&raw, k, args.sep)?;
            let kept = t.kept.len();
            (t.stream, t.vocab_size, t.separator, Some(kept))
        }
        None => {
            let max = raw
                .iter()
                .filter(|&&w| Some(w) != args.sep)
                .max()
                .copied()
                .ok_or_else(|| anyhow::anyhow!("stream contains only separators"))?;
            (raw, max as usize + 1, args.sep, None)
        }
    };
    let (counts, matrix) = ingest_bigram_counts(&stream, vocab_size, separator)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    formats::write_bigram_counts(&args.out.join("counts.csv"), &counts)?;

    let distinct_sources: std::collections::BTreeSet<u32> =
        counts.sorted_entries().iter().map(|&(s, _, _)| s).collect();
    let zero_rows = vocab_size - distinct_sources.len();
    let header = json!({
        "input": args.input.display().to_string(),
        "stream_tokens": stream.len(),
        "vocab_size": vocab_size,
        "total_pairs": counts.total(),
        "truncate": args.truncate,
        "kept_types": kept,
        "overflow_id": args.truncate.map(|k| k - 1),
        "separator_input_id": args.sep,
        "zero_rows_made_uniform": zero_rows,
    });
    formats::write_json(&args.out.join("counts.json"), &header)?;

    formats::write_matrix(&args.out.join("matrix.iftm"), &matrix)?;
    formats::write_json(
        &args.out.join("matrix.iftm.json"),
        &json!({
            "vocab_size": vocab_size,
            "format": {"magic": "IFTM", "version": formats::MATRIX_VERSION, "element": "f64le"},
            "built_by": "ingest",
            "source": header,
        }),
    )?;

    let config = json!({
        "in": args.input.display().to_string(),
        "format": if is_bin { "bin" } else { "text" },
        "truncate": args.truncate,
        "sep": args.sep,
    });
    let mut manifest = RunManifest::new("ingest", config, vec![]);
    manifest.add_artifact(&args.out, "counts.csv")?;
    manifest.add_artifact(&args.out, "counts.json")?;
    manifest.add_artifact(&args.out, "matrix.iftm")?;
    manifest.add_artifact(&args.out, "matrix.iftm.json")?;
    manifest.write(&args.out)?;
    println!(
        "wrote {} (vocab {vocab_size}, {} pairs, {zero_rows} empty rows made uniform)",
        args.out.join("matrix.iftm").display(),
        counts.total()
    );
    Ok(())
}
