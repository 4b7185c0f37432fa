//! Constrained sequence generation from a transition matrix.
//!
//! Chunks are built in two halves. The first half is a random walk restricted
//! to unseen token types, which stocks the unigram set before any repetition
//! can be asked for. Each second-half step then either completes a repeated
//! bigram (emitting the stored first continuation of the current token),
//! revisits a seen token type (creating a repeat without reusing a bigram),
//! or takes a fresh token, with both branch probabilities calibrated so the
//! measured second-half frequency and reliability match the requested
//! values. No token ever appears twice in a row.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::markov::{stationary_or_average, TransitionMatrix};
use crate::ngram::{bigram_repeats, range_repetition_stats, repetition_stats, RepetitionStats};
use crate::rng::{derive_seed, root_rng};
use crate::{Error, Result};

/// Generation request: context size, repetition targets, chunk count, seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    /// Tokens per chunk; even, at least 4, and ctx_size/2 must not exceed the
    /// vocabulary (the first half needs that many distinct types).
    pub ctx_size: usize,
    /// Target frequency P(AB...A) of the second half.
    pub alpha: f64,
    /// Target reliability P(B|AB...A) of the second half.
    pub beta: f64,
    pub num_chunks: usize,
    pub seed: u64,
}

/// One generated sequence plus the number of constraint relaxations its
/// generation needed (each step down the fallback ladder counts one).
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub tokens: Vec<u32>,
    pub fallback_count: u32,
}

/// Corpus-level measurements, reported for whole chunks and for second
/// halves separately: the branching constraints act on the second half only,
/// so whole-chunk numbers are diluted by the repetition-free first half.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub requested_alpha: f64,
    pub requested_beta: f64,
    /// Internal seen-type branch probability. The raw branch rate compounds
    /// with repeat-to-repeat persistence, so it is lowered to make the
    /// stationary repeat rate equal the requested alpha.
    pub calibrated_alpha: f64,
    /// Internal completion probability: raised above the requested beta to
    /// compensate the measured ratio's structural losses (see
    /// [`calibrate_beta`]).
    pub calibrated_beta: f64,
    pub num_chunks: usize,
    pub ctx_size: usize,
    pub total_tokens: u64,
    pub fallback_count: u64,
    /// Pooled over all chunk positions.
    pub whole: RepetitionStats,
    /// Pooled over second-half positions (repeat status judged against the
    /// whole chunk prefix).
    pub second_half: RepetitionStats,
}

/// Chunk factory for one (matrix, spec) pair; chunks are independent given
/// their index.
pub struct ChunkGenerator<'a> {
    matrix: &'a TransitionMatrix,
    spec: CorpusSpec,
    start_dist: Vec<f64>,
    calibrated_alpha: f64,
    calibrated_beta: f64,
}

/// Branch probability that makes the stationary second-half repeat rate equal
/// the requested frequency.
///
/// A repeat position persists with probability `beta + (1-beta)*a'` (bigram
/// completion or another seen-type draw), giving stationary rate
/// `a' / (1 - beta(1-a'))`; solving that for the requested `alpha` yields
/// `a' = alpha(1-beta) / (1-alpha*beta)`. Fixed points: alpha 0 -> 0,
/// alpha 1 -> 1.
pub fn calibrate_alpha(alpha: f64, beta: f64) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    alpha * (1.0 - beta) / (1.0 - alpha * beta)
}

/// Completion probability that makes the measured second-half reliability
/// equal the requested `beta`.
///
/// Two structural effects pull the measured ratio below the per-step
/// completion rate. The second half opens with no repeat state, so the
/// repeat rate warms up from zero toward its stationary value and early
/// positions contribute fewer opportunities than late ones; and the final
/// position can host a repeat but starts no bigram, so its completion is
/// never counted. With per-position repeat rates `f_t`, the measured
/// reliability comes out to `b * (sum f_t - f_last) / sum f_t` for internal
/// completion rate `b`. This solves that for the requested value by fixed
/// point (the `f_t` depend on `b` through the frequency calibration),
/// clamping at 1 when the boundary loss cannot be compensated.
pub fn calibrate_beta(alpha: f64, beta: f64, ctx_size: usize) -> f64 {
    let m = ctx_size / 2;
    if alpha <= 0.0 || beta <= 0.0 || m < 2 {
        return beta.clamp(0.0, 1.0);
    }
    let mut b = beta.min(1.0);
    for _ in 0..32 {
        let a = calibrate_alpha(alpha, b);
        let mut f = 0.0;
        let mut sum = 0.0;
        for _ in 0..m {
            f = f * b + (1.0 - f * b) * a;
            sum += f;
        }
        if sum <= f {
            return 1.0;
        }
        let next = (beta * sum / (sum - f)).min(1.0);
        if (next - b).abs() < 1e-12 {
            return next;
        }
        b = next;
    }
    b
}

impl<'a> ChunkGenerator<'a> {
    pub fn new(matrix: &'a TransitionMatrix, spec: CorpusSpec) -> Result<Self> {
        if spec.ctx_size < 4 || !spec.ctx_size.is_multiple_of(2) {
            return Err(Error::Param(format!(
                "ctx_size must be even and at least 4, got {}",
                spec.ctx_size
            )));
        }
        if spec.ctx_size / 2 > matrix.vocab_size() {
            return Err(Error::Param(format!(
                "ctx_size/2 = {} exceeds vocab {}; the first half cannot stay fresh",
                spec.ctx_size / 2,
                matrix.vocab_size()
            )));
        }
        for (name, v) in [("alpha", spec.alpha), ("beta", spec.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Param(format!("{name} must be in [0,1], got {v}")));
            }
        }
        let start_dist = stationary_or_average(matrix).into_vec();
        let calibrated_beta = calibrate_beta(spec.alpha, spec.beta, spec.ctx_size);
        let calibrated_alpha = calibrate_alpha(spec.alpha, calibrated_beta);
        Ok(Self { matrix, spec, start_dist, calibrated_alpha, calibrated_beta })
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn calibrated_alpha(&self) -> f64 {
        self.calibrated_alpha
    }

    pub fn calibrated_beta(&self) -> f64 {
        self.calibrated_beta
    }

    /// Generates chunk `index` deterministically (seed derived from the spec
    /// seed and the index).
    pub fn generate(&self, index: u64) -> Chunk {
        let chunk_seed = derive_seed(self.spec.seed, index);
        self.generate_seeded(chunk_seed)
    }

    /// Generates one chunk from an explicit seed.
    pub fn generate_seeded(&self, chunk_seed: u64) -> Chunk {
        let v = self.matrix.vocab_size();
        let ctx = self.spec.ctx_size;
        let m = ctx / 2;
        let mut rng = root_rng(chunk_seed);
        let mut tokens: Vec<u32> = Vec::with_capacity(ctx);
        let mut seen = vec![false; v];
        // First attested continuation per token type, never overwritten.
        let mut continuation: Vec<Option<u32>> = vec![None; v];
        // Every bigram emitted so far: the measured reliability judges
        // repeats against this same history, so the non-completion draw
        // excludes exactly these pairs.
        let mut seen_bi: HashSet<(u32, u32)> = HashSet::with_capacity(ctx);
        let mut fallbacks = 0u32;

        let w1 = sample_dist(&self.start_dist, &mut rng);
        seen[w1 as usize] = true;
        tokens.push(w1);
        let mut cur = w1;
        // Whether `cur` had been seen before its own position.
        let mut cur_is_repeat = false;

        while tokens.len() < ctx {
            let second_half = tokens.len() >= m;
            let next = if second_half {
                // Both gates are drawn every step, consulted or not, so the
                // stream layout does not depend on the branch taken.
                let make_aba = rng.random::<f64>() < self.calibrated_alpha;
                let make_abab = rng.random::<f64>() < self.calibrated_beta;
                if cur_is_repeat && make_abab {
                    // Completing the repeated bigram is a one-point
                    // distribution; no randomness consumed.
                    continuation[cur as usize].expect("repeated token has a continuation")
                } else if make_aba {
                    self.sample_seen(cur, cur_is_repeat, &seen, &seen_bi, &mut rng, &mut fallbacks)
                } else {
                    self.sample_fresh(cur, &seen, &mut rng, &mut fallbacks)
                }
            } else {
                self.sample_fresh(cur, &seen, &mut rng, &mut fallbacks)
            };
            tokens.push(next);
            if continuation[cur as usize].is_none() {
                continuation[cur as usize] = Some(next);
            }
            seen_bi.insert((cur, next));
            cur_is_repeat = seen[next as usize];
            seen[next as usize] = true;
            cur = next;
        }
        Chunk { tokens, fallback_count: fallbacks }
    }

    /// Seen-type draw: row of `cur` restricted to seen tokens minus `cur`
    /// itself. When `cur` is a repeat the draw also avoids every bigram
    /// already in the chunk — any previously used successor of `cur` would
    /// silently complete a repeat the completion gate declined. Ladder: drop
    /// the bigram exclusion, then the seen restriction, then the row weights
    /// altogether.
    fn sample_seen(
        &self,
        cur: u32,
        cur_is_repeat: bool,
        seen: &[bool],
        seen_bi: &HashSet<(u32, u32)>,
        rng: &mut ChaCha8Rng,
        fallbacks: &mut u32,
    ) -> u32 {
        let row = self.matrix.row(cur as usize);
        let not_cur = |j: usize| j as u32 != cur;
        if cur_is_repeat {
            if let Some(w) = sample_row(row, rng, |j| {
                seen[j] && not_cur(j) && !seen_bi.contains(&(cur, j as u32))
            }) {
                return w;
            }
            *fallbacks += 1;
        }
        if let Some(w) = sample_row(row, rng, |j| seen[j] && not_cur(j)) {
            return w;
        }
        *fallbacks += 1;
        if let Some(w) = sample_row(row, rng, not_cur) {
            return w;
        }
        *fallbacks += 1;
        uniform_except(seen.len(), cur, rng)
    }

    /// Fresh-type draw: row of `cur` restricted to unseen tokens (`cur` is
    /// always seen by now, so it is excluded automatically). Ladder: drop the
    /// unseen restriction, then the row weights.
    fn sample_fresh(
        &self,
        cur: u32,
        seen: &[bool],
        rng: &mut ChaCha8Rng,
        fallbacks: &mut u32,
    ) -> u32 {
        let row = self.matrix.row(cur as usize);
        if let Some(w) = sample_row(row, rng, |j| !seen[j]) {
            return w;
        }
        *fallbacks += 1;
        if let Some(w) = sample_row(row, rng, |j| j as u32 != cur) {
            return w;
        }
        *fallbacks += 1;
        uniform_except(seen.len(), cur, rng)
    }
}

/// Inverse-CDF draw over the allowed entries of `row`; `None` when the
/// allowed mass is zero. Consumes exactly one uniform draw either way.
fn sample_row<F: Fn(usize) -> bool>(row: &[f64], rng: &mut ChaCha8Rng, allow: F) -> Option<u32> {
    let mut mass = 0.0;
    for (j, &p) in row.iter().enumerate() {
        if allow(j) {
            mass += p;
        }
    }
    let u = rng.random::<f64>();
    if mass <= 0.0 {
        return None;
    }
    let target = u * mass;
    let mut cum = 0.0;
    let mut last = None;
    for (j, &p) in row.iter().enumerate() {
        if allow(j) && p > 0.0 {
            cum += p;
            last = Some(j as u32);
            if cum > target {
                return Some(j as u32);
            }
        }
    }
    last // rounding left `target` at the very top of the CDF
}

/// Plain inverse-CDF draw from a full distribution.
fn sample_dist(dist: &[f64], rng: &mut ChaCha8Rng) -> u32 {
    let target = rng.random::<f64>();
    let mut cum = 0.0;
    let mut last = 0;
    for (j, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = j as u32;
            if cum > target {
                return j as u32;
            }
        }
    }
    last
}

/// Uniform draw over the vocabulary minus `cur`: the unconditional last rung
/// of the fallback ladder.
fn uniform_except(v: usize, cur: u32, rng: &mut ChaCha8Rng) -> u32 {
    let k = rng.random_range(0..v as u32 - 1);
    if k >= cur {
        k + 1
    } else {
        k
    }
}

/// Generates chunk `index` of `spec` (seed derived from spec seed and index).
pub fn generate_chunk(matrix: &TransitionMatrix, spec: &CorpusSpec, index: u64) -> Result<Chunk> {
    Ok(ChunkGenerator::new(matrix, spec.clone())?.generate(index))
}

/// Generates the whole corpus and measures it.
pub fn generate_corpus(
    matrix: &TransitionMatrix,
    spec: &CorpusSpec,
) -> Result<(Vec<Chunk>, GenerationStats)> {
    let generator = ChunkGenerator::new(matrix, spec.clone())?;
    let mut chunks = Vec::with_capacity(spec.num_chunks);
    for i in 0..spec.num_chunks {
        chunks.push(generator.generate(i as u64));
    }
    let stats = measure_corpus(&generator, &chunks);
    Ok((chunks, stats))
}

fn pool(parts: impl Iterator<Item = RepetitionStats>) -> RepetitionStats {
    let (mut uni, mut bi, mut len) = (0u64, 0u64, 0u64);
    for p in parts {
        uni += p.unigram_rep_count;
        bi += p.bigram_rep_count;
        len += p.token_count;
    }
    let frequency = if len == 0 { 0.0 } else { uni as f64 / len as f64 };
    let p_abab = if len == 0 { 0.0 } else { bi as f64 / len as f64 };
    RepetitionStats {
        frequency,
        reliability: if frequency == 0.0 { 0.0 } else { p_abab / frequency },
        p_abab,
        unigram_rep_count: uni,
        bigram_rep_count: bi,
        token_count: len,
    }
}

fn measure_corpus(generator: &ChunkGenerator<'_>, chunks: &[Chunk]) -> GenerationStats {
    let spec = generator.spec();
    let m = spec.ctx_size / 2;
    let whole = pool(chunks.iter().map(|c| repetition_stats(&c.tokens)));
    let second_half = pool(
        chunks
            .iter()
            .map(|c| range_repetition_stats(&c.tokens, m..c.tokens.len())),
    );
    GenerationStats {
        requested_alpha: spec.alpha,
        requested_beta: spec.beta,
        calibrated_alpha: generator.calibrated_alpha(),
        calibrated_beta: generator.calibrated_beta(),
        num_chunks: chunks.len(),
        ctx_size: spec.ctx_size,
        total_tokens: chunks.iter().map(|c| c.tokens.len() as u64).sum(),
        fallback_count: chunks.iter().map(|c| c.fallback_count as u64).sum(),
        whole,
        second_half,
    }
}

/// Measures an already-generated corpus against a spec (used when reloading
/// chunks from disk).
pub fn measure_chunks(
    matrix: &TransitionMatrix,
    spec: &CorpusSpec,
    chunks: &[Chunk],
) -> Result<GenerationStats> {
    let generator = ChunkGenerator::new(matrix, spec.clone())?;
    Ok(measure_corpus(&generator, chunks))
}

/// Unconstrained random walk of `len` tokens (start token from the stationary
/// distribution, then plain row draws). Handy for stocking bigram-count
/// ingestion with matrix-shaped data.
pub fn random_walk(matrix: &TransitionMatrix, len: usize, seed: u64) -> Vec<u32> {
    let start = stationary_or_average(matrix).into_vec();
    let mut rng = root_rng(seed);
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let mut cur = sample_dist(&start, &mut rng);
    out.push(cur);
    for _ in 1..len {
        cur = sample_dist(matrix.row(cur as usize), &mut rng);
        out.push(cur);
    }
    out
}

/// Two-class chunk mixture: picks `num_output` chunks so that the fraction
/// with zero bigram repetitions hits `p_nr` within rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct NrMixSpec {
    /// Target fraction of repetition-free chunks.
    pub p_nr: f64,
    pub num_output: usize,
    pub seed: u64,
}

/// Selects indices into `chunks` realizing the mixture: round(p_nr * n)
/// repetition-free chunks and the rest with repetitions, each class sampled
/// uniformly without replacement, then shuffled. Deterministic given seed.
pub fn select_nr_mixture<S: AsRef<[u32]>>(chunks: &[S], spec: &NrMixSpec) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&spec.p_nr) {
        return Err(Error::Param(format!("p_nr must be in [0,1], got {}", spec.p_nr)));
    }
    if spec.num_output == 0 {
        return Err(Error::Param("num_output must be positive".into()));
    }
    let mut nr: Vec<usize> = Vec::new();
    let mut rep: Vec<usize> = Vec::new();
    for (i, c) in chunks.iter().enumerate() {
        if bigram_repeats(c.as_ref()) == 0 {
            nr.push(i);
        } else {
            rep.push(i);
        }
    }
    let want_nr = (spec.p_nr * spec.num_output as f64).round() as usize;
    let want_rep = spec.num_output - want_nr;
    if want_nr > nr.len() {
        return Err(Error::InfeasibleMixture {
            class: "repetition-free",
            need: want_nr,
            have: nr.len(),
        });
    }
    if want_rep > rep.len() {
        return Err(Error::InfeasibleMixture {
            class: "with-repetition",
            need: want_rep,
            have: rep.len(),
        });
    }
    let mut rng = root_rng(spec.seed);
    partial_shuffle(&mut nr, want_nr, &mut rng);
    partial_shuffle(&mut rep, want_rep, &mut rng);
    let mut out: Vec<usize> = nr[..want_nr].iter().chain(&rep[..want_rep]).copied().collect();
    // Full Fisher-Yates on the combined selection.
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        out.swap(i, j);
    }
    Ok(out)
}

/// First `take` slots become a uniform sample without replacement.
fn partial_shuffle(items: &mut [usize], take: usize, rng: &mut ChaCha8Rng) {
    let n = items.len();
    for i in 0..take.min(n.saturating_sub(1)) {
        let j = i + rng.random_range(0..(n - i) as u64) as usize;
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{target_marginal, MarginalSpec};

    fn dense_matrix(v: usize) -> TransitionMatrix {
        let row = target_marginal(&MarginalSpec::zipf(v)).unwrap();
        TransitionMatrix::from_identical_rows(&row).unwrap()
    }

    fn cycle_matrix(v: usize) -> TransitionMatrix {
        let mut data = vec![0.0; v * v];
        for i in 0..v {
            data[i * v + (i + 1) % v] = 1.0;
        }
        TransitionMatrix::from_rows(v, data).unwrap()
    }

    #[test]
    fn validates_spec() {
        let t = dense_matrix(8);
        let bad_ctx = CorpusSpec { ctx_size: 5, alpha: 0.5, beta: 0.5, num_chunks: 1, seed: 0 };
        assert!(ChunkGenerator::new(&t, bad_ctx).is_err());
        let too_wide = CorpusSpec { ctx_size: 32, alpha: 0.5, beta: 0.5, num_chunks: 1, seed: 0 };
        assert!(ChunkGenerator::new(&t, too_wide).is_err());
        let bad_alpha = CorpusSpec { ctx_size: 8, alpha: 1.5, beta: 0.5, num_chunks: 1, seed: 0 };
        assert!(ChunkGenerator::new(&t, bad_alpha).is_err());
    }

    #[test]
    fn no_consecutive_repeats_ever() {
        let t = dense_matrix(50);
        let spec = CorpusSpec { ctx_size: 64, alpha: 0.8, beta: 0.8, num_chunks: 50, seed: 9 };
        let (chunks, _) = generate_corpus(&t, &spec).unwrap();
        for c in &chunks {
            assert_eq!(c.tokens.len(), 64);
            for w in c.tokens.windows(2) {
                assert_ne!(w[0], w[1]);
            }
        }
    }

    #[test]
    fn alpha_zero_means_zero_frequency_everywhere() {
        let t = dense_matrix(100);
        let spec = CorpusSpec { ctx_size: 64, alpha: 0.0, beta: 0.5, num_chunks: 30, seed: 1 };
        let (chunks, stats) = generate_corpus(&t, &spec).unwrap();
        for c in &chunks {
            assert_eq!(repetition_stats(&c.tokens).frequency, 0.0);
        }
        assert_eq!(stats.whole.frequency, 0.0);
        assert_eq!(stats.fallback_count, 0);
    }

    #[test]
    fn calibration_fixed_points() {
        assert_eq!(calibrate_alpha(0.0, 0.7), 0.0);
        assert_eq!(calibrate_alpha(1.0, 0.7), 1.0);
        // alpha' solves alpha = a'/(1 - beta(1-a')).
        let a = calibrate_alpha(0.3, 0.6);
        assert!((a / (1.0 - 0.6 * (1.0 - a)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn cycle_matrix_second_half_replays_first() {
        // With alpha = beta = 1 on a deterministic cycle, the walk uses all
        // 4 types in the first half, then must revisit; every revisit has a
        // stored continuation, so the second half replays the first exactly.
        let t = cycle_matrix(4);
        let spec = CorpusSpec { ctx_size: 8, alpha: 1.0, beta: 1.0, num_chunks: 5, seed: 3 };
        let (chunks, _) = generate_corpus(&t, &spec).unwrap();
        for c in &chunks {
            assert_eq!(c.tokens[4..8], c.tokens[0..4]);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let t = dense_matrix(64);
        let spec = CorpusSpec { ctx_size: 32, alpha: 0.5, beta: 0.5, num_chunks: 20, seed: 77 };
        let (a, sa) = generate_corpus(&t, &spec).unwrap();
        let (b, sb) = generate_corpus(&t, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        let other = CorpusSpec { seed: 78, ..spec };
        let (c, _) = generate_corpus(&t, &other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_corpus_is_empty() {
        let t = dense_matrix(16);
        let spec = CorpusSpec { ctx_size: 8, alpha: 0.5, beta: 0.5, num_chunks: 0, seed: 0 };
        let (chunks, stats) = generate_corpus(&t, &spec).unwrap();
        assert!(chunks.is_empty());
        assert_eq!(stats.total_tokens, 0);
        assert_eq!(stats.whole.frequency, 0.0);
    }

    #[test]
    fn mixture_hits_requested_composition() {
        // 100 repetition-free + 100 with-repetition chunks.
        let mut chunks: Vec<Vec<u32>> = Vec::new();
        for i in 0..100 {
            chunks.push(vec![i, i + 100, i + 200, i + 300]);
        }
        for i in 0..100 {
            chunks.push(vec![i, i + 100, i, i + 100]);
        }
        let spec = NrMixSpec { p_nr: 0.5, num_output: 100, seed: 5 };
        let picked = select_nr_mixture(&chunks, &spec).unwrap();
        assert_eq!(picked.len(), 100);
        let nr = picked.iter().filter(|&&i| i < 100).count();
        assert_eq!(nr, 50);
        // Determinism and no duplicate picks.
        let again = select_nr_mixture(&chunks, &spec).unwrap();
        assert_eq!(picked, again);
        let mut sorted = picked.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
    }

    #[test]
    fn mixture_names_the_deficit_class() {
        let chunks: Vec<Vec<u32>> = vec![vec![1, 2, 1, 2]; 10];
        let spec = NrMixSpec { p_nr: 0.5, num_output: 10, seed: 0 };
        match select_nr_mixture(&chunks, &spec).unwrap_err() {
            Error::InfeasibleMixture { class, need, have } => {
                assert_eq!(class, "repetition-free");
                assert_eq!((need, have), (5, 0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn mixture_p_zero_returns_shuffled_sources() {
        let chunks: Vec<Vec<u32>> = (0..10).map(|i| vec![i, i + 1, i, i + 1]).collect();
        let spec = NrMixSpec { p_nr: 0.0, num_output: 10, seed: 2 };
        let picked = select_nr_mixture(&chunks, &spec).unwrap();
        let mut sorted = picked.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn random_walk_is_deterministic_and_sized() {
        let t = dense_matrix(32);
        let a = random_walk(&t, 1000, 4);
        let b = random_walk(&t, 1000, 4);
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        assert!(a.iter().all(|&w| (w as usize) < 32));
    }
}
