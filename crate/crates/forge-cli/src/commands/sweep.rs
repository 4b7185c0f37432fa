//! `forge sweep`: grid execution. Cells run independently (worker pool
//! capped by `FORGE_THREADS`, default 1), each into its own axis-value-named
//! subdirectory with a full per-cell artifact set. The summary CSV is
//! assembled in cell-index order (row-major over the axes as listed); cell
//! failures are recorded in the summary and make the exit code nonzero, but
//! never stop the remaining cells.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::Args;

use forge_core::corpus::CorpusSpec;
use forge_core::rng::derive_seed;

use crate::commands::{gen, optimize};
use crate::config::{load_config, CorpusSweep, MatrixSweep, SweepConfig};
use crate::formats;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep config JSON ({"kind": "corpus" | "matrix", ...}).
    #[arg(long)]
    pub config: PathBuf,
    /// Output root; cells go to axis-value-named subdirectories.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SweepArgs) -> Result<()> {
    let cfg: SweepConfig = load_config(&args.config)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let (cells, failures) = match &cfg {
        SweepConfig::Corpus(c) => corpus_sweep(c, &args.out)?,
        SweepConfig::Matrix(m) => matrix_sweep(m, &args.out)?,
    };
    let mut manifest = RunManifest::new("sweep", serde_json::to_value(&cfg)?, vec![]);
    manifest.add_artifact(&args.out, "summary.csv")?;
    manifest.write(&args.out)?;
    println!(
        "{} cells, {} failed, summary at {}",
        cells,
        failures,
        args.out.join("summary.csv").display()
    );
    if failures > 0 {
        bail!("{failures} of {cells} cells failed");
    }
    Ok(())
}

fn thread_cap() -> usize {
    std::env::var("FORGE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .map(|n| n.clamp(1, 64))
        .unwrap_or(1)
}

/// Runs `worker` over cell indices 0..n on a fixed-size pool; results come
/// back indexed so summaries are order-stable regardless of scheduling.
fn run_cells<T: Send>(
    n: usize,
    worker: impl Fn(usize) -> Result<T> + Sync,
) -> Vec<Result<T>> {
    let threads = thread_cap().min(n.max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = worker(i);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("cell result missing"))
        .collect()
}

fn corpus_sweep(cfg: &CorpusSweep, out: &Path) -> Result<(usize, usize)> {
    if cfg.alphas.is_empty() || cfg.betas.is_empty() {
        bail!("empty sweep axes");
    }
    let matrix = formats::read_matrix(&cfg.matrix)?;
    let cells: Vec<(f64, f64)> = cfg
        .alphas
        .iter()
        .flat_map(|&a| cfg.betas.iter().map(move |&b| (a, b)))
        .collect();

    let results = run_cells(cells.len(), |i| {
        let (alpha, beta) = cells[i];
        let dir = out.join(format!("alpha={alpha}_beta={beta}"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let spec = CorpusSpec {
            ctx_size: cfg.ctx_size,
            alpha,
            beta,
            num_chunks: cfg.chunks_per_cell,
            seed: derive_seed(cfg.seed, i as u64),
        };
        gen::generate_into_dir(&matrix, &spec, None, 2.0, &dir)
    });

    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    w.write_record([
        "cell",
        "alpha",
        "beta",
        "status",
        "second_half_frequency",
        "second_half_reliability",
        "whole_frequency",
        "whole_reliability",
        "fallback_fraction",
    ])?;
    let mut failures = 0;
    for (i, ((alpha, beta), result)) in cells.iter().zip(&results).enumerate() {
        match result {
            Ok(stats) => w.write_record([
                i.to_string(),
                format!("{alpha}"),
                format!("{beta}"),
                "ok".to_string(),
                format!("{}", stats.second_half.frequency),
                format!("{}", stats.second_half.reliability),
                format!("{}", stats.whole.frequency),
                format!("{}", stats.whole.reliability),
                format!("{}", stats.fallback_count as f64 / stats.total_tokens as f64),
            ])?,
            Err(e) => {
                failures += 1;
                w.write_record([
                    i.to_string(),
                    format!("{alpha}"),
                    format!("{beta}"),
                    format!("error: {e:#}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok((cells.len(), failures))
}

fn matrix_sweep(cfg: &MatrixSweep, out: &Path) -> Result<(usize, usize)> {
    if cfg.marginals.is_empty() || cfg.structures.is_empty() {
        bail!("empty sweep axes");
    }
    for s in &cfg.structures {
        if !matches!(s.as_str(), "+d+c" | "+d-c" | "-d") {
            bail!("unknown structure {s:?} (+d+c | +d-c | -d)");
        }
    }
    let cells: Vec<(String, String)> = cfg
        .marginals
        .iter()
        .flat_map(|m| cfg.structures.iter().map(move |s| (m.clone(), s.clone())))
        .collect();

    let results = run_cells(cells.len(), |i| {
        let (marginal, structure) = &cells[i];
        let dir = out.join(format!("marginal={marginal}_structure={structure}"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut cell_cfg = cfg.base.clone();
        cell_cfg.marginal = marginal.clone();
        cell_cfg.seed = derive_seed(cfg.base.seed, i as u64);
        match structure.as_str() {
            "-d" => cell_cfg.identical_rows = true,
            "+d+c" => {
                cell_cfg.identical_rows = false;
                cell_cfg.within_target = Some(cfg.plus_c_within);
                cell_cfg.across_target = Some(cfg.across);
            }
            "+d-c" => {
                cell_cfg.identical_rows = false;
                cell_cfg.within_target = Some(cfg.minus_c_within);
                cell_cfg.across_target = Some(cfg.across);
            }
            _ => unreachable!("validated above"),
        }
        optimize::build_into_dir(&cell_cfg, &dir)
    });

    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    w.write_record([
        "cell",
        "marginal",
        "structure",
        "status",
        "conditional_entropy_bits",
        "marginal_kl_bits",
        "within_similarity",
        "across_similarity",
        "mean_row_max",
    ])?;
    let mut failures = 0;
    for (i, ((marginal, structure), result)) in cells.iter().zip(&results).enumerate() {
        match result {
            Ok(stats) => w.write_record([
                i.to_string(),
                marginal.clone(),
                structure.clone(),
                "ok".to_string(),
                format!("{}", stats.conditional_entropy),
                format!("{}", stats.marginal_kl),
                format!("{}", stats.within_similarity),
                format!("{}", stats.across_similarity),
                format!("{}", stats.mean_row_max),
            ])?,
            Err(e) => {
                failures += 1;
                w.write_record([
                    i.to_string(),
                    marginal.clone(),
                    structure.clone(),
                    format!("error: {e:#}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok((cells.len(), failures))
}
