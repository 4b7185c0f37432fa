//! On-disk formats: binary matrix files, token streams, attention dumps,
//! PS curves, scaling-law observations, and bigram-count tables.
//!
//! Readers fail with the byte offset for structural problems (bad magic,
//! short files) and defer content invariants (row-stochasticity, causality)
//! to the core constructors so the same checks guard every entry point.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use forge_core::induction::{AttentionDump, AttentionMatrix, HeadMatrix};
use forge_core::law::{LawObservation, PsCurve};
use forge_core::markov::TransitionMatrix;
use forge_core::ngram::BigramCounts;

pub const MATRIX_MAGIC: &[u8; 4] = b"IFTM";
pub const MATRIX_VERSION: u32 = 1;
const MATRIX_HEADER_LEN: usize = 12;

/// Writes the binary matrix format: magic "IFTM", version u32 LE, vocab_size
/// u32 LE, then row-major f64 LE.
pub fn write_matrix(path: &Path, t: &TransitionMatrix) -> Result<()> {
    let v = t.vocab_size();
    let mut buf = Vec::with_capacity(MATRIX_HEADER_LEN + v * v * 8);
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    buf.extend_from_slice(&(v as u32).to_le_bytes());
    for x in t.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<TransitionMatrix> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() < MATRIX_HEADER_LEN {
        bail!(
            "{}: truncated header at byte {} ({} bytes total, need {})",
            path.display(),
            bytes.len(),
            bytes.len(),
            MATRIX_HEADER_LEN
        );
    }
    if &bytes[0..4] != MATRIX_MAGIC {
        bail!("{}: bad magic {:?} at byte 0", path.display(), &bytes[0..4]);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != MATRIX_VERSION {
        bail!("{}: unsupported version {} at byte 4", path.display(), version);
    }
    let v = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = MATRIX_HEADER_LEN + v * v * 8;
    if bytes.len() != expected {
        bail!(
            "{}: expected {} bytes for a {v}x{v} matrix, found {} (row data starts at byte {})",
            path.display(),
            expected,
            bytes.len(),
            MATRIX_HEADER_LEN
        );
    }
    let data: Vec<f64> = bytes[MATRIX_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    TransitionMatrix::from_rows(v, data)
        .with_context(|| format!("{}: invalid matrix content", path.display()))
}

/// Token streams are flat little-endian u32.
pub fn write_tokens(path: &Path, tokens: &[u32]) -> Result<()> {
    let mut buf = Vec::with_capacity(tokens.len() * 4);
    for t in tokens {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_tokens(path: &Path) -> Result<Vec<u32>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() % 4 != 0 {
        bail!(
            "{}: length {} is not a multiple of 4 (u32 stream damaged near byte {})",
            path.display(),
            bytes.len(),
            bytes.len() - bytes.len() % 4
        );
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// ASCII token stream: whitespace-separated integers.
pub fn read_tokens_text(path: &Path) -> Result<Vec<u32>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.split_whitespace()
        .map(|w| {
            w.parse::<u32>()
                .with_context(|| format!("{}: bad token {w:?}", path.display()))
        })
        .collect()
}

/// The attention-dump JSON schema: `attn` is base64 of little-endian f32,
/// row-major `[layer][head][query][key]`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttnDumpFile {
    pub step: u64,
    pub context: usize,
    pub layers: usize,
    pub heads: usize,
    pub eval_seq: Vec<u32>,
    pub attn: String,
}

pub fn read_attention_dump(path: &Path) -> Result<AttentionDump> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: AttnDumpFile =
        serde_json::from_str(&text).with_context(|| format!("{}: bad dump JSON", path.display()))?;
    let raw = B64
        .decode(&file.attn)
        .with_context(|| format!("{}: attn field is not valid base64", path.display()))?;
    let per_head = file.context * file.context;
    let expected = file.layers * file.heads * per_head * 4;
    if raw.len() != expected {
        bail!(
            "{}: attn payload is {} bytes, expected {} ({} layers x {} heads x {}^2 f32)",
            path.display(),
            raw.len(),
            expected,
            file.layers,
            file.heads,
            file.context
        );
    }
    let floats: Vec<f64> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let mut heads = Vec::with_capacity(file.layers * file.heads);
    for layer in 0..file.layers {
        for head in 0..file.heads {
            let base = (layer * file.heads + head) * per_head;
            let attn = AttentionMatrix::new(file.context, floats[base..base + per_head].to_vec())
                .with_context(|| {
                    format!("{}: layer {layer} head {head}", path.display())
                })?;
            heads.push(HeadMatrix {
                layer: layer as u32,
                head: head as u32,
                attn,
            });
        }
    }
    let dump = AttentionDump {
        step: file.step,
        eval_seq: file.eval_seq,
        heads,
    };
    dump.validate()
        .with_context(|| format!("{}: dump invariants violated", path.display()))?;
    Ok(dump)
}

/// Writes a dump from a `layers x heads` grid of matrices (row-major).
pub fn write_attention_dump(
    path: &Path,
    step: u64,
    eval_seq: &[u32],
    layers: usize,
    heads: usize,
    grid: &[AttentionMatrix],
) -> Result<()> {
    if grid.len() != layers * heads || grid.is_empty() {
        bail!("grid has {} matrices, expected {layers} x {heads}", grid.len());
    }
    let context = grid[0].context();
    let mut raw = Vec::with_capacity(layers * heads * context * context * 4);
    for m in grid {
        if m.context() != context {
            bail!("mixed context sizes in dump grid");
        }
        for q in 0..context {
            for k in 0..context {
                raw.extend_from_slice(&(m.get(q, k) as f32).to_le_bytes());
            }
        }
    }
    let file = AttnDumpFile {
        step,
        context,
        layers,
        heads,
        eval_seq: eval_seq.to_vec(),
        attn: B64.encode(&raw),
    };
    write_json(path, &serde_json::to_value(&file)?)
}

/// Curve metadata sidecar for the `step,best_ps` CSV.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveMeta {
    pub batch_size: u64,
    pub context_size: u64,
}

pub fn write_ps_curve(csv_path: &Path, meta_path: &Path, curve: &PsCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    w.write_record(["step", "best_ps"])?;
    for &(step, ps) in &curve.points {
        w.write_record([step.to_string(), format!("{ps}")])?;
    }
    w.flush()?;
    let meta = CurveMeta {
        batch_size: curve.batch_size,
        context_size: curve.context_size,
    };
    write_json(meta_path, &serde_json::to_value(&meta)?)
}

pub fn read_ps_curve(csv_path: &Path, meta: Option<&Path>) -> Result<PsCurve> {
    let (batch_size, context_size) = match meta {
        Some(p) => {
            let m: CurveMeta = serde_json::from_str(
                &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            )
            .with_context(|| format!("{}: bad curve metadata", p.display()))?;
            (m.batch_size, m.context_size)
        }
        None => (1, 1),
    };
    let mut r = csv::Reader::from_path(csv_path)
        .with_context(|| format!("reading {}", csv_path.display()))?;
    expect_headers(&mut r, &["step", "best_ps"], csv_path)?;
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let step: u64 = parse_field(&rec, 0, csv_path)?;
        let ps: f64 = parse_field(&rec, 1, csv_path)?;
        points.push((step, ps));
    }
    Ok(PsCurve::new(batch_size, context_size, points)?)
}

pub fn write_observations(path: &Path, obs: &[LawObservation]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["batch_size", "context_size", "transition_updates"])?;
    for o in obs {
        w.write_record([
            format!("{}", o.batch_size),
            format!("{}", o.context_size),
            format!("{}", o.transition_updates),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_observations(path: &Path) -> Result<Vec<LawObservation>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    expect_headers(&mut r, &["batch_size", "context_size", "transition_updates"], path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(LawObservation {
            batch_size: parse_field(&rec, 0, path)?,
            context_size: parse_field(&rec, 1, path)?,
            transition_updates: parse_field(&rec, 2, path)?,
        });
    }
    Ok(out)
}

pub fn write_bigram_counts(path: &Path, counts: &BigramCounts) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["src", "dst", "count"])?;
    for (s, d, c) in counts.sorted_entries() {
        w.write_record([s.to_string(), d.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bigram_counts(path: &Path, vocab_size: usize) -> Result<BigramCounts> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    expect_headers(&mut r, &["src", "dst", "count"], path)?;
    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        entries.push((
            parse_field(&rec, 0, path)?,
            parse_field(&rec, 1, path)?,
            parse_field(&rec, 2, path)?,
        ));
    }
    Ok(BigramCounts::from_entries(vocab_size, &entries)?)
}

/// Pretty JSON with a trailing newline; `serde_json`'s map is sorted, so
/// output is byte-deterministic.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: bad JSON", path.display()))
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(format!("{:x}", h.finalize()))
}

fn expect_headers(r: &mut csv::Reader<fs::File>, want: &[&str], path: &Path) -> Result<()> {
    let got = r.headers().with_context(|| format!("reading {}", path.display()))?;
    let got: Vec<&str> = got.iter().collect();
    if got != want {
        bail!("{}: header {:?}, expected {:?}", path.display(), got, want);
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec
        .get(i)
        .with_context(|| format!("{}: short record {:?}", path.display(), rec))?;
    raw.parse::<T>().map_err(|e| {
        anyhow::anyhow!("{}: field {i} {raw:?}: {e}", path.display())
    })
}
