//! Repetition statistics, chunk histograms, and bigram-count ingestion.
//!
//! Frequency is the fraction of positions that repeat an already-seen token
//! type; reliability is the fraction of those that also repeat the bigram
//! continuation of the first occurrence. Both use the plain count form:
//! `frequency = (1/|s|) * sum_w max(c(w)-1, 0)` and
//! `p_abab = (1/|s|) * sum_b max(c(b)-1, 0)`, with
//! `reliability = p_abab / frequency`.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::markov::TransitionMatrix;
use crate::{Error, Result};

/// Repetition measurements for one token sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepetitionStats {
    /// P(AB...A): fraction of positions repeating a seen token type.
    pub frequency: f64,
    /// P(B|AB...A) = p_abab / frequency (0 when frequency is 0).
    pub reliability: f64,
    /// P(ABAB): fraction of positions starting a repeated bigram.
    pub p_abab: f64,
    /// Sum over token types of (count - 1), clamped at 0.
    pub unigram_rep_count: u64,
    /// Sum over bigram types of (count - 1), clamped at 0.
    pub bigram_rep_count: u64,
    /// Sequence length used as the denominator.
    pub token_count: u64,
}

impl RepetitionStats {
    fn from_counts(unigram_reps: u64, bigram_reps: u64, len: u64) -> Self {
        let frequency = if len == 0 { 0.0 } else { unigram_reps as f64 / len as f64 };
        let p_abab = if len == 0 { 0.0 } else { bigram_reps as f64 / len as f64 };
        let reliability = if frequency == 0.0 { 0.0 } else { p_abab / frequency };
        Self {
            frequency,
            reliability,
            p_abab,
            unigram_rep_count: unigram_reps,
            bigram_rep_count: bigram_reps,
            token_count: len,
        }
    }
}

/// Repetition statistics of `s` by the plain count formulas.
///
/// Sequences shorter than 2 tokens have no repetition and return zeros.
pub fn repetition_stats(s: &[u32]) -> RepetitionStats {
    let mut unigrams: HashMap<u32, u64> = HashMap::new();
    for &w in s {
        *unigrams.entry(w).or_insert(0) += 1;
    }
    let mut bigrams: HashMap<(u32, u32), u64> = HashMap::new();
    for pair in s.windows(2) {
        *bigrams.entry((pair[0], pair[1])).or_insert(0) += 1;
    }
    let uni_reps: u64 = unigrams.values().map(|&c| c - 1).sum();
    let bi_reps: u64 = bigrams.values().map(|&c| c - 1).sum();
    RepetitionStats::from_counts(uni_reps, bi_reps, s.len() as u64)
}

/// Strict-mode statistics: runs of consecutive identical tokens are collapsed
/// to a single occurrence first, then the plain formulas apply to the
/// collapsed sequence. Equals [`repetition_stats`] on consecutive-free input.
pub fn repetition_stats_strict(s: &[u32]) -> RepetitionStats {
    let mut collapsed = Vec::with_capacity(s.len());
    for &w in s {
        if collapsed.last() != Some(&w) {
            collapsed.push(w);
        }
    }
    repetition_stats(&collapsed)
}

/// Position-level repetition indicators over the whole sequence.
///
/// `r_u[t]` is true when the token at `t` is a non-first occurrence of its
/// type; `r_b[t]` when the bigram starting at `t` is a non-first occurrence
/// of its type (always false at the last position, which starts no bigram).
pub fn repetition_indicators(s: &[u32]) -> (Vec<bool>, Vec<bool>) {
    let mut seen_uni: HashSet<u32> = HashSet::new();
    let mut seen_bi: HashSet<(u32, u32)> = HashSet::new();
    let mut r_u = vec![false; s.len()];
    let mut r_b = vec![false; s.len()];
    for (t, &w) in s.iter().enumerate() {
        r_u[t] = !seen_uni.insert(w);
        if t + 1 < s.len() {
            r_b[t] = !seen_bi.insert((w, s[t + 1]));
        }
    }
    (r_u, r_b)
}

/// Repetition statistics over positions `range` of `s`, with repeat status
/// judged against the whole prefix (a token first seen before the range still
/// counts as seen). Used to report second-half measurements of generated
/// chunks, whose constraints act only on the second half.
pub fn range_repetition_stats(s: &[u32], range: std::ops::Range<usize>) -> RepetitionStats {
    let (r_u, r_b) = repetition_indicators(s);
    let uni: u64 = range.clone().filter(|&t| r_u[t]).count() as u64;
    let bi: u64 = range.clone().filter(|&t| r_b[t]).count() as u64;
    RepetitionStats::from_counts(uni, bi, range.len() as u64)
}

/// Number of repeated-bigram occurrences in one chunk.
pub fn bigram_repeats(s: &[u32]) -> u64 {
    let mut bigrams: HashMap<(u32, u32), u64> = HashMap::new();
    for pair in s.windows(2) {
        *bigrams.entry((pair[0], pair[1])).or_insert(0) += 1;
    }
    bigrams.values().map(|&c| c - 1).sum()
}

/// Distribution of chunks over their repeated-bigram counts; fractions sum
/// to 1.
pub fn chunk_repetition_histogram<S: AsRef<[u32]>>(chunks: &[S]) -> Result<BTreeMap<u64, f64>> {
    if chunks.is_empty() {
        return Err(Error::Invalid("histogram needs at least one chunk".into()));
    }
    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    for c in chunks {
        *hist.entry(bigram_repeats(c.as_ref())).or_insert(0) += 1;
    }
    let n = chunks.len() as f64;
    Ok(hist.into_iter().map(|(k, v)| (k, v as f64 / n)).collect())
}

/// Sparse bigram occurrence counts over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramCounts {
    vocab_size: usize,
    counts: HashMap<(u32, u32), u64>,
    total: u64,
}

impl BigramCounts {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, src: u32, dst: u32) -> u64 {
        self.counts.get(&(src, dst)).copied().unwrap_or(0)
    }

    /// Entries in ascending (src, dst) order.
    pub fn sorted_entries(&self) -> Vec<(u32, u32, u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(&(s, d), &c)| (s, d, c)).collect();
        v.sort_unstable();
        v
    }

    /// Rebuilds from entries, validating IDs against the vocabulary.
    pub fn from_entries(vocab_size: usize, entries: &[(u32, u32, u64)]) -> Result<Self> {
        let mut counts = HashMap::new();
        let mut total = 0u64;
        for &(s, d, c) in entries {
            if s as usize >= vocab_size || d as usize >= vocab_size {
                return Err(Error::Invalid(format!(
                    "bigram ({s},{d}) outside vocab {vocab_size}"
                )));
            }
            if c == 0 {
                return Err(Error::Invalid(format!("bigram ({s},{d}) has zero count")));
            }
            *counts.entry((s, d)).or_insert(0) += c;
            total += c;
        }
        Ok(Self { vocab_size, counts, total })
    }

    /// Row-normalized transition matrix: attested rows use raw relative
    /// frequencies (no smoothing); unattested tokens get uniform rows.
    pub fn to_transition_matrix(&self) -> Result<TransitionMatrix> {
        let v = self.vocab_size;
        let mut row_totals = vec![0u64; v];
        for (&(s, _), &c) in &self.counts {
            row_totals[s as usize] += c;
        }
        let mut data = vec![0.0; v * v];
        for (i, &rt) in row_totals.iter().enumerate() {
            if rt == 0 {
                let u = 1.0 / v as f64;
                data[i * v..(i + 1) * v].iter_mut().for_each(|x| *x = u);
            }
        }
        for (&(s, d), &c) in &self.counts {
            data[s as usize * v + d as usize] = c as f64 / row_totals[s as usize] as f64;
        }
        TransitionMatrix::from_rows(v, data)
    }
}

/// Accumulates bigram counts over consecutive pairs of `stream`, treating
/// `doc_separator` (when supplied) as a document boundary that breaks pairs
/// and is itself excluded from the counts. Returns the counts together with
/// the derived transition matrix.
pub fn ingest_bigram_counts(
    stream: &[u32],
    vocab_size: usize,
    doc_separator: Option<u32>,
) -> Result<(BigramCounts, TransitionMatrix)> {
    if stream.is_empty() {
        return Err(Error::Invalid("empty token stream".into()));
    }
    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
    let mut total = 0u64;
    let mut prev: Option<u32> = None;
    for (pos, &w) in stream.iter().enumerate() {
        if Some(w) == doc_separator {
            prev = None;
            continue;
        }
        if w as usize >= vocab_size {
            return Err(Error::Invalid(format!(
                "token {w} at position {pos} outside vocab {vocab_size}"
            )));
        }
        if let Some(p) = prev {
            *counts.entry((p, w)).or_insert(0) += 1;
            total += 1;
        }
        prev = Some(w);
    }
    let bc = BigramCounts { vocab_size, counts, total };
    let t = bc.to_transition_matrix()?;
    Ok((bc, t))
}

/// Result of reducing a stream to its `k` most frequent token types.
#[derive(Debug, Clone)]
pub struct TruncateResult {
    /// Remapped stream: kept tokens get IDs 0..k-1 in descending-frequency
    /// order (ties by original ID), everything else maps to the overflow ID
    /// k-1, and the document separator (if any) becomes ID k.
    pub stream: Vec<u32>,
    /// New vocabulary size (= k).
    pub vocab_size: usize,
    /// Separator ID in the new stream, when one was supplied.
    pub separator: Option<u32>,
    /// Original IDs of the kept tokens, indexed by new ID (the overflow slot
    /// has no original ID and is not listed).
    pub kept: Vec<u32>,
}

/// Maps the top `k - 1` token types by frequency to IDs 0..k-2 and all other
/// tokens to the overflow ID `k - 1`. Separator occurrences pass through as
/// ID `k` so that boundary structure survives remapping.
pub fn truncate_vocabulary(
    stream: &[u32],
    k: usize,
    doc_separator: Option<u32>,
) -> Result<TruncateResult> {
    if k < 2 {
        return Err(Error::Param("truncated vocab must have at least 2 IDs".into()));
    }
    let mut freq: HashMap<u32, u64> = HashMap::new();
    for &w in stream {
        if Some(w) != doc_separator {
            *freq.entry(w).or_insert(0) += 1;
        }
    }
    let mut by_freq: Vec<(u32, u64)> = freq.into_iter().collect();
    by_freq.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let kept: Vec<u32> = by_freq.iter().take(k - 1).map(|&(w, _)| w).collect();
    let new_id: HashMap<u32, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, &w)| (w, i as u32))
        .collect();
    let overflow = (k - 1) as u32;
    let sep_id = doc_separator.map(|_| k as u32);
    let stream = stream
        .iter()
        .map(|&w| {
            if Some(w) == doc_separator {
                k as u32
            } else {
                new_id.get(&w).copied().unwrap_or(overflow)
            }
        })
        .collect();
    Ok(TruncateResult { stream, vocab_size: k, separator: sep_id, kept })
}

/// Quartile summary of one statistic across chunks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistSummary {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    // Linear interpolation between closest ranks (type-7).
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(mut values: Vec<f64>) -> DistSummary {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    DistSummary {
        q1: quantile(&values, 0.25),
        median: quantile(&values, 0.5),
        q3: quantile(&values, 0.75),
        mean,
    }
}

/// Per-context-size distribution summary of frequency and reliability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeSummary {
    pub ctx_size: usize,
    pub frequency: DistSummary,
    pub reliability: DistSummary,
}

/// Summarizes per-chunk frequency/reliability distributions for corpora
/// chunked at several context sizes.
pub fn context_size_sweep<S: AsRef<[u32]>>(
    per_size: &[(usize, Vec<S>)],
) -> Result<Vec<SizeSummary>> {
    let mut out = Vec::with_capacity(per_size.len());
    for (ctx, chunks) in per_size {
        if chunks.is_empty() {
            return Err(Error::Invalid(format!("no chunks supplied for ctx {ctx}")));
        }
        let stats: Vec<RepetitionStats> =
            chunks.iter().map(|c| repetition_stats(c.as_ref())).collect();
        out.push(SizeSummary {
            ctx_size: *ctx,
            frequency: summarize(stats.iter().map(|s| s.frequency).collect()),
            reliability: summarize(stats.iter().map(|s| s.reliability).collect()),
        });
    }
    Ok(out)
}
