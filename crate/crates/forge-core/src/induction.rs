//! Prefix scores of attention maps and the random-attention baseline.
//!
//! The probe sequence is a run of L distinct tokens repeated once. An
//! induction head attending from the second occurrence of token k to the
//! position right after the first occurrence puts its weight on key
//! `q - (L-1)` for query `q`; the prefix score averages that weight over the
//! second half. The baseline threshold is the upper quantile of the same
//! score under attention rows drawn uniformly from the causal simplex, which
//! is what an untrained head produces.

use rand::Rng;
use rand_distr::Exp1;

use crate::rng::root_rng;
use crate::{Error, Result};

/// Maximum probe half-length: training contexts beyond 100 tokens are probed
/// with a 50-token block repeated rather than a full-context repeat.
pub const MAX_SCORED_HALF: usize = 50;

/// Probe half-length for a training context: `min(context/2, 50)`.
pub fn probe_half_length(train_context: usize) -> usize {
    (train_context / 2).min(MAX_SCORED_HALF)
}

/// Causal attention weights of a single head: a `context x context` row-major
/// matrix, row `q` a distribution over keys `0..=q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix {
    context: usize,
    data: Vec<f64>,
}

const ROW_SUM_TOL: f64 = 1e-5;
const CAUSAL_TOL: f64 = 1e-9;

impl AttentionMatrix {
    /// Validates shape, causality (zeros above the diagonal), non-negativity,
    /// and per-row normalization within 1e-5.
    pub fn new(context: usize, data: Vec<f64>) -> Result<Self> {
        if context < 4 || !context.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "attention context must be even and at least 4, got {context}"
            )));
        }
        if data.len() != context * context {
            return Err(Error::Invalid(format!(
                "attention data has {} entries, expected {}",
                data.len(),
                context * context
            )));
        }
        for q in 0..context {
            let row = &data[q * context..(q + 1) * context];
            let mut sum = 0.0;
            for (k, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::Invalid(format!("non-finite weight at ({q},{k})")));
                }
                if k > q {
                    if x.abs() > CAUSAL_TOL {
                        return Err(Error::Invalid(format!(
                            "non-causal weight {x} at query {q}, key {k}"
                        )));
                    }
                } else {
                    if x < -CAUSAL_TOL {
                        return Err(Error::Invalid(format!(
                            "negative weight {x} at query {q}, key {k}"
                        )));
                    }
                    sum += x;
                }
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Invalid(format!("row {q} sums to {sum}, expected 1")));
            }
        }
        Ok(Self { context, data })
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn get(&self, query: usize, key: usize) -> f64 {
        self.data[query * self.context + key]
    }
}

/// How second-half rows are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsMode {
    /// Skip the first second-half row (its induction target is the sequence
    /// start) and divide by the L-1 scored rows; perfect induction scores 1.
    #[default]
    Consistent,
    /// Score all L second-half rows but keep the L-1 normalizer; retained for
    /// comparison with histories computed this way (can exceed 1).
    Literal,
}

/// Mean induction-key weight over the repeated half of the probe. The
/// matrix is always over the probe sequence itself, so the offset is its own
/// half-length minus one (probes for long training contexts are already
/// capped by [`probe_half_length`]).
pub fn prefix_score(attn: &AttentionMatrix, mode: PsMode) -> Result<f64> {
    let l = attn.context() / 2;
    if l < 2 {
        return Err(Error::Param(format!(
            "context {} leaves no scorable rows",
            attn.context()
        )));
    }
    let offset = l - 1;
    let last = match mode {
        PsMode::Consistent => 2 * l - 2,
        PsMode::Literal => 2 * l - 1,
    };
    let mut sum = 0.0;
    for q in l..=last {
        sum += attn.get(q, q - offset);
    }
    Ok(sum / (l - 1) as f64)
}

/// Largest prefix score over a set of heads.
pub fn best_prefix_score(heads: &[AttentionMatrix], mode: PsMode) -> Result<f64> {
    if heads.is_empty() {
        return Err(Error::InsufficientData("no attention heads to score".into()));
    }
    let ctx = heads[0].context();
    let mut best = f64::NEG_INFINITY;
    for h in heads {
        if h.context() != ctx {
            return Err(Error::Invalid(format!(
                "mixed contexts {ctx} and {} in one checkpoint",
                h.context()
            )));
        }
        best = best.max(prefix_score(h, mode)?);
    }
    Ok(best)
}

/// Best prefix score per checkpoint, sorted by step. Steps must be unique.
pub fn best_ps_points(
    checkpoints: &[(u64, Vec<AttentionMatrix>)],
    mode: PsMode,
) -> Result<Vec<(u64, f64)>> {
    let mut out: Vec<(u64, f64)> = Vec::with_capacity(checkpoints.len());
    for (step, heads) in checkpoints {
        out.push((*step, best_prefix_score(heads, mode)?));
    }
    out.sort_by_key(|&(step, _)| step);
    for w in out.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Invalid(format!("duplicate checkpoint step {}", w[0].0)));
        }
    }
    Ok(out)
}

/// One head of a parsed attention checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadMatrix {
    pub layer: u32,
    pub head: u32,
    pub attn: AttentionMatrix,
}

/// A full attention checkpoint: training step, probe sequence, and every
/// head's weights over it.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionDump {
    pub step: u64,
    pub eval_seq: Vec<u32>,
    pub heads: Vec<HeadMatrix>,
}

impl AttentionDump {
    /// Checks the probe sequence (even length, two identical halves of
    /// distinct tokens) and that every head matches its length.
    pub fn validate(&self) -> Result<()> {
        validate_eval_sequence(&self.eval_seq)?;
        let ctx = self.eval_seq.len();
        if self.heads.is_empty() {
            return Err(Error::InsufficientData("attention dump has no heads".into()));
        }
        for h in &self.heads {
            if h.attn.context() != ctx {
                return Err(Error::Invalid(format!(
                    "layer {} head {} has context {}, probe sequence has {ctx}",
                    h.layer,
                    h.head,
                    h.attn.context()
                )));
            }
        }
        Ok(())
    }

    pub fn best_prefix_score(&self, mode: PsMode) -> Result<f64> {
        self.validate()?;
        let heads: Vec<AttentionMatrix> = self.heads.iter().map(|h| h.attn.clone()).collect();
        best_prefix_score(&heads, mode)
    }
}

/// A valid probe sequence is L >= 2 distinct tokens followed by the same L
/// tokens again; anything else makes the induction target ambiguous.
pub fn validate_eval_sequence(seq: &[u32]) -> Result<()> {
    if seq.len() < 4 || !seq.len().is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "probe sequence length must be even and at least 4, got {}",
            seq.len()
        )));
    }
    let l = seq.len() / 2;
    if seq[..l] != seq[l..] {
        return Err(Error::Invalid("probe sequence halves differ".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for &w in &seq[..l] {
        if !seen.insert(w) {
            return Err(Error::Invalid(format!("token {w} repeats within the probe half")));
        }
    }
    Ok(())
}

/// Draws L distinct tokens uniformly without replacement and repeats them:
/// a fresh probe sequence of length 2L.
pub fn sample_eval_sequence(vocab_size: usize, l: usize, seed: u64) -> Result<Vec<u32>> {
    if l < 2 {
        return Err(Error::Param(format!("probe half-length must be at least 2, got {l}")));
    }
    if l > vocab_size {
        return Err(Error::Param(format!(
            "probe half-length {l} exceeds vocabulary {vocab_size}"
        )));
    }
    let mut rng = root_rng(seed);
    let mut pool: Vec<u32> = (0..vocab_size as u32).collect();
    for i in 0..l {
        let j = i + rng.random_range(0..(vocab_size - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut seq = pool[..l].to_vec();
    seq.extend_from_within(..);
    Ok(seq)
}

/// Monte Carlo baseline for untrained attention.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdConfig {
    pub context_size: usize,
    /// Upper-tail mass above the threshold (e.g. 0.01 for the 99th
    /// percentile).
    pub alpha_level: f64,
    pub num_samples: usize,
    pub seed: u64,
}

/// Simulates prefix scores of fully random causal attention (each row
/// uniform on its simplex, drawn as normalized Exp(1) weights) and returns
/// the nearest-rank `1 - alpha_level` quantile.
///
/// All L second-half rows contribute and the mean divides by L: the baseline
/// describes a head with no distinguished rows, so no row is exempted the way
/// the consistent score exempts the wrap-around row of a trained head.
pub fn random_attention_threshold(cfg: &ThresholdConfig) -> Result<f64> {
    if cfg.context_size < 4 || !cfg.context_size.is_multiple_of(2) {
        return Err(Error::Param(format!(
            "context must be even and at least 4, got {}",
            cfg.context_size
        )));
    }
    if !(cfg.alpha_level > 0.0 && cfg.alpha_level < 1.0) {
        return Err(Error::Param(format!(
            "alpha level must be in (0,1), got {}",
            cfg.alpha_level
        )));
    }
    if cfg.num_samples == 0 {
        return Err(Error::Param("need at least one sample".into()));
    }
    let l = (cfg.context_size / 2).min(MAX_SCORED_HALF);
    let offset = l - 1;
    let mut rng = root_rng(cfg.seed);
    let mut scores = Vec::with_capacity(cfg.num_samples);
    for _ in 0..cfg.num_samples {
        let mut sum = 0.0;
        for q in l..2 * l {
            // Row q has q+1 keys; Exp(1) draws normalized are Dirichlet(1,..,1).
            let mut total = 0.0;
            let mut at_key = 0.0;
            for k in 0..=q {
                let e: f64 = rng.sample(Exp1);
                total += e;
                if k == q - offset {
                    at_key = e;
                }
            }
            sum += at_key / total;
        }
        scores.push(sum / l as f64);
    }
    scores.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = scores.len();
    let rank = ((1.0 - cfg.alpha_level) * n as f64).ceil() as usize;
    Ok(scores[rank.clamp(1, n) - 1])
}
