//! Gradient synthesis of transition matrices with prescribed statistics.
//!
//! A matrix is parameterized as per-row logits mapped through softmax, and
//! Adam descends a weighted sum of five penalties: divergence of the model
//! marginal from a target shape, squared conditional-entropy gap, mean row
//! maximum (peakedness), and squared gaps of within- and across-category row
//! similarity. The stationary distribution enters the loss as a running
//! estimate that is refined by a few warm-started power-iteration sweeps per
//! step and treated as a constant by the gradient (the one-step marginal
//! `pi T` carries the dependence instead).
//!
//! The frozen-estimate objective and its exact gradient are exposed as
//! [`loss_given_pi`] / [`grad_given_pi`] so finite differences can audit the
//! same code path the optimizer runs.

use rand_distr::{Distribution, Normal};

use crate::markov::{
    category_similarities, conditional_entropy, kl_divergence, refine_stationary,
    stationary_or_average, target_marginal, CategoryAssignment, MarginalSpec, TransitionMatrix,
    DEFAULT_TOL,
};
use crate::rng::root_rng;
use crate::{Error, Result};

use std::f64::consts::LN_2;

pub const DEFAULT_STEPS: usize = 5000;
pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
/// Default squared-error weights: marginal KL dominates, entropy is a gentle
/// pull, peakedness a mild regularizer, category gaps moderate.
pub const DEFAULT_WEIGHTS: LossWeights =
    LossWeights { marginal: 100.0, entropy: 0.01, peakedness: 0.1, within: 5.0, across: 5.0 };
/// Standard deviation of the seeded normal logit initialization.
pub const INIT_LOGIT_STD: f64 = 0.1;
/// Power-iteration sweeps per optimization step; the estimate warm-starts
/// from the previous step, so a small cap suffices and stays bounded.
pub const PI_REFINE_ITERS: usize = 200;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Weights of the five loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub marginal: f64,
    pub entropy: f64,
    pub peakedness: f64,
    pub within: f64,
    pub across: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        DEFAULT_WEIGHTS
    }
}

/// Entropy target used when none is given: one bit under the uniform limit,
/// capped at 6.2 bits for vocabularies large enough to afford it.
pub fn default_entropy_target(vocab_size: usize) -> f64 {
    ((vocab_size as f64).log2() - 1.0).min(6.2)
}

/// Everything the optimizer needs: target statistics, schedule, and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTargets {
    pub marginal: MarginalSpec,
    pub categories: CategoryAssignment,
    /// Conditional entropy target in bits.
    pub entropy_target: f64,
    /// Mean within-category cosine of transition rows.
    pub within_target: f64,
    /// Mean across-category cosine of transition rows.
    pub across_target: f64,
    pub weights: LossWeights,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl MatrixTargets {
    /// Targets with default schedule, weights, entropy target, and the
    /// category-structured similarity defaults (within 0.4, across 0.1).
    pub fn new(marginal: MarginalSpec, categories: CategoryAssignment, seed: u64) -> Result<Self> {
        let t = Self {
            entropy_target: default_entropy_target(marginal.vocab_size),
            within_target: 0.4,
            across_target: 0.1,
            weights: LossWeights::default(),
            steps: DEFAULT_STEPS,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed,
            marginal,
            categories,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.marginal.vocab_size;
        if self.categories.vocab_size() != v {
            return Err(Error::Param(format!(
                "category assignment covers {} tokens but the marginal has {v}",
                self.categories.vocab_size()
            )));
        }
        if self.categories.num_categories() < 2 {
            return Err(Error::Param("need at least two categories".into()));
        }
        if self.categories.tokens_per_category() < 2 {
            return Err(Error::Param("need at least two tokens per category".into()));
        }
        if !(self.entropy_target.is_finite() && self.entropy_target >= 0.0) {
            return Err(Error::Param(format!(
                "entropy target must be finite and non-negative, got {}",
                self.entropy_target
            )));
        }
        for (name, x) in [("within", self.within_target), ("across", self.across_target)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Param(format!(
                    "{name} similarity target must be in [0,1], got {x}"
                )));
            }
        }
        let w = &self.weights;
        for (name, x) in [
            ("marginal", w.marginal),
            ("entropy", w.entropy),
            ("peakedness", w.peakedness),
            ("within", w.within),
            ("across", w.across),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::Param(format!(
                    "{name} weight must be finite and non-negative, got {x}"
                )));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Param(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// The five raw penalties plus their weighted total. Gap terms are squared;
/// `peakedness` and `marginal_kl` enter the total as-is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub marginal_kl: f64,
    pub entropy_gap_sq: f64,
    pub peakedness: f64,
    pub within_gap_sq: f64,
    pub across_gap_sq: f64,
}

impl LossTerms {
    pub fn raw_array(&self) -> [f64; 5] {
        [
            self.marginal_kl,
            self.entropy_gap_sq,
            self.peakedness,
            self.within_gap_sq,
            self.across_gap_sq,
        ]
    }

    fn is_finite(&self) -> bool {
        self.total.is_finite() && self.raw_array().iter().all(|x| x.is_finite())
    }
}

/// Descriptive statistics of a finished matrix, all recomputed from the
/// emitted rows with a fully converged stationary distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixStats {
    pub conditional_entropy: f64,
    /// KL from the target marginal to the model marginal `pi T`.
    pub marginal_kl: f64,
    pub within_similarity: f64,
    pub across_similarity: f64,
    pub mean_row_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    /// Loss at the start of every step (the emitted matrix is one update
    /// past the last entry).
    pub trace: Vec<LossTerms>,
    pub final_stats: MatrixStats,
}

/// Statistics of `t` against the targets, using the converged stationary
/// distribution (Cesaro-averaged if the chain is periodic).
pub fn matrix_stats(t: &TransitionMatrix, targets: &MatrixTargets) -> Result<MatrixStats> {
    targets.validate()?;
    let v = t.vocab_size();
    if v != targets.marginal.vocab_size {
        return Err(Error::Param(format!(
            "matrix vocab {v} does not match target vocab {}",
            targets.marginal.vocab_size
        )));
    }
    let p_target = target_marginal(&targets.marginal)?;
    let pi = stationary_or_average(t);
    let h = conditional_entropy(t, &pi);
    let mut m = vec![0.0; v];
    for i in 0..v {
        let w = pi.pi()[i];
        for (o, &x) in m.iter_mut().zip(t.row(i)) {
            *o += w * x;
        }
    }
    let kl = kl_divergence(&p_target, &m)?;
    let (within, across) = category_similarities(t, &targets.categories)?;
    let mean_row_max = (0..v)
        .map(|i| t.row(i).iter().fold(0.0, |a: f64, &b| a.max(b)))
        .sum::<f64>()
        / v as f64;
    Ok(MatrixStats {
        conditional_entropy: h,
        marginal_kl: kl,
        within_similarity: within,
        across_similarity: across,
        mean_row_max,
    })
}

/// Loss terms of `t` against the targets with a self-consistent stationary
/// distribution. The per-step optimizer uses its running estimate instead,
/// so traced values can differ slightly from this audit value.
pub fn loss_terms(t: &TransitionMatrix, targets: &MatrixTargets) -> Result<LossTerms> {
    let stats = matrix_stats(t, targets)?;
    Ok(terms_from_stats(&stats, targets))
}

fn terms_from_stats(stats: &MatrixStats, targets: &MatrixTargets) -> LossTerms {
    let egap = targets.entropy_target - stats.conditional_entropy;
    let wgap = targets.within_target - stats.within_similarity;
    let agap = targets.across_target - stats.across_similarity;
    let w = &targets.weights;
    let terms = [
        stats.marginal_kl,
        egap * egap,
        stats.mean_row_max,
        wgap * wgap,
        agap * agap,
    ];
    LossTerms {
        total: w.marginal * terms[0]
            + w.entropy * terms[1]
            + w.peakedness * terms[2]
            + w.within * terms[3]
            + w.across * terms[4],
        marginal_kl: terms[0],
        entropy_gap_sq: terms[1],
        peakedness: terms[2],
        within_gap_sq: terms[3],
        across_gap_sq: terms[4],
    }
}

/// Local-dependency-free matrix: every row is the target marginal, so the
/// next token is independent of the current one and the stationary marginal
/// equals the target exactly.
pub fn build_minus_d_matrix(spec: &MarginalSpec) -> Result<TransitionMatrix> {
    let row = target_marginal(spec)?;
    TransitionMatrix::from_identical_rows(&row)
}

/// Row-major softmax state reused across steps: probabilities, log-sum-exp,
/// Euclidean row norms, first-argmax indices, and row entropies in bits.
struct Forward {
    v: usize,
    t: Vec<f64>,
    lse: Vec<f64>,
    norm: Vec<f64>,
    argmax: Vec<usize>,
    h_row: Vec<f64>,
}

impl Forward {
    fn new(v: usize) -> Self {
        Self {
            v,
            t: vec![0.0; v * v],
            lse: vec![0.0; v],
            norm: vec![0.0; v],
            argmax: vec![0; v],
            h_row: vec![0.0; v],
        }
    }

    fn compute(&mut self, z: &[f64]) {
        let v = self.v;
        for i in 0..v {
            let z_row = &z[i * v..(i + 1) * v];
            let t_row = &mut self.t[i * v..(i + 1) * v];
            let mut mx = f64::NEG_INFINITY;
            let mut am = 0;
            for (j, &x) in z_row.iter().enumerate() {
                if x > mx {
                    mx = x;
                    am = j;
                }
            }
            let mut sum = 0.0;
            for (o, &x) in t_row.iter_mut().zip(z_row) {
                let e = (x - mx).exp();
                *o = e;
                sum += e;
            }
            let inv = 1.0 / sum;
            let lse = mx + sum.ln();
            let mut tz = 0.0;
            let mut sq = 0.0;
            for (o, &x) in t_row.iter_mut().zip(z_row) {
                let p = *o * inv;
                *o = p;
                tz += p * x;
                sq += p * p;
            }
            self.lse[i] = lse;
            self.norm[i] = sq.sqrt();
            self.argmax[i] = am;
            // Row entropy in bits via the identity sum_j p log2 p =
            // (sum_j p z - lse) / ln 2; no per-entry logs needed.
            self.h_row[i] = (lse - tz) / LN_2;
        }
    }
}

/// Per-step aggregates under a frozen stationary estimate.
struct Stats {
    /// One-step marginal `pi T`.
    m: Vec<f64>,
    /// Sum of all unit rows.
    s_all: Vec<f64>,
    /// Per-category sums of unit rows, `ncat x v` row-major.
    s_cat: Vec<f64>,
    h: f64,
    kl: f64,
    peak: f64,
    wc: f64,
    ac: f64,
    n_w: f64,
    n_a: f64,
}

fn stats_pass(
    fw: &Forward,
    pi: &[f64],
    p_target: &[f64],
    cat: &CategoryAssignment,
) -> Result<Stats> {
    let v = fw.v;
    let ncat = cat.num_categories();
    let mut m = vec![0.0; v];
    let mut s_all = vec![0.0; v];
    let mut s_cat = vec![0.0; ncat * v];
    let mut diag = vec![0.0; ncat];
    let mut h = 0.0;
    let mut peak = 0.0;
    for i in 0..v {
        let t_row = &fw.t[i * v..(i + 1) * v];
        let w = pi[i];
        let c = cat.category_of(i);
        let inv_norm = 1.0 / fw.norm[i];
        let sc_row = &mut s_cat[c * v..(c + 1) * v];
        let mut uu = 0.0;
        for j in 0..v {
            let t = t_row[j];
            m[j] += w * t;
            let u = t * inv_norm;
            s_all[j] += u;
            sc_row[j] += u;
            uu += u * u;
        }
        diag[c] += uu;
        h += w * fw.h_row[i];
        peak += t_row[fw.argmax[i]];
    }
    peak /= v as f64;
    let k = cat.tokens_per_category();
    let n_w = (v * (k - 1)) as f64;
    let n_a = (v * v - ncat * k * k) as f64;
    let sum_sc_sq: f64 = (0..ncat)
        .map(|c| s_cat[c * v..(c + 1) * v].iter().map(|x| x * x).sum::<f64>())
        .sum();
    let s_sq: f64 = s_all.iter().map(|x| x * x).sum();
    let sum_diag: f64 = diag.iter().sum();
    let wc = (sum_sc_sq - sum_diag) / n_w;
    let ac = (s_sq - sum_sc_sq) / n_a;
    let mut kl = 0.0;
    for (j, &p) in p_target.iter().enumerate() {
        if p > 0.0 {
            if m[j] <= 0.0 {
                return Err(Error::DivergentKl { index: j });
            }
            kl += p * (p / m[j]).log2();
        }
    }
    Ok(Stats { m, s_all, s_cat, h, kl, peak, wc, ac, n_w, n_a })
}

fn terms_of(stats: &Stats, targets: &MatrixTargets) -> LossTerms {
    terms_from_stats(
        &MatrixStats {
            conditional_entropy: stats.h,
            marginal_kl: stats.kl,
            within_similarity: stats.wc,
            across_similarity: stats.ac,
            mean_row_max: stats.peak,
        },
        targets,
    )
}

/// Step-constant gradient coefficients.
struct GradScalars {
    /// `2 w_e (Ht - H)`; multiplied by `pi_i (log2 T_ij + 1/ln 2)` per entry.
    e_coeff: f64,
    /// `w_kl / ln 2`; multiplied by `-pi_i p_j / m_j` per entry.
    kl_scale: f64,
    /// `w_peak / v`, added at the row argmax.
    peak_add: f64,
    /// `-4 w_wc (WCt - WC) / N_w` applied to `(S_c - u)`.
    wc_scale: f64,
    /// `-4 w_ac (ACt - AC) / N_a` applied to `(S - S_c)`.
    ac_scale: f64,
}

impl GradScalars {
    fn new(stats: &Stats, targets: &MatrixTargets) -> Self {
        let w = &targets.weights;
        let v = targets.marginal.vocab_size as f64;
        Self {
            e_coeff: 2.0 * w.entropy * (targets.entropy_target - stats.h),
            kl_scale: w.marginal / LN_2,
            peak_add: w.peakedness / v,
            wc_scale: -4.0 * w.within * (targets.within_target - stats.wc) / stats.n_w,
            ac_scale: -4.0 * w.across * (targets.across_target - stats.ac) / stats.n_a,
        }
    }
}

/// Gradient of the frozen-estimate loss with respect to logits of row `i`,
/// written into `g` (length v).
#[allow(clippy::too_many_arguments)]
fn row_grad(
    fw: &Forward,
    stats: &Stats,
    sc: &GradScalars,
    cat: &CategoryAssignment,
    p_target: &[f64],
    z: &[f64],
    pi_i: f64,
    i: usize,
    g: &mut [f64],
) {
    let v = fw.v;
    let t_row = &fw.t[i * v..(i + 1) * v];
    let z_row = &z[i * v..(i + 1) * v];
    let lse = fw.lse[i];
    let e_row = sc.e_coeff * pi_i;
    let kl_row = sc.kl_scale * pi_i;
    const INV_LN2: f64 = 1.0 / LN_2;
    for j in 0..v {
        // Entropy: d/dT of -sum T log2 T is -(log2 T + 1/ln2); the gap
        // prefactor flips the sign into e_row.
        let mut gt = e_row * ((z_row[j] - lse) / LN_2 + INV_LN2);
        let p = p_target[j];
        if p > 0.0 {
            gt -= kl_row * p / stats.m[j];
        }
        g[j] = gt;
    }
    g[fw.argmax[i]] += sc.peak_add;
    if sc.wc_scale != 0.0 || sc.ac_scale != 0.0 {
        let c = cat.category_of(i);
        let s_c = &stats.s_cat[c * v..(c + 1) * v];
        let inv_norm = 1.0 / fw.norm[i];
        // dWC/du_i = 2(S_c - u_i)/N_w and dAC/du_i = 2(S - S_c)/N_a; the
        // normalization u = r/|r| projects out the u-parallel component.
        let mut u_sc = 0.0;
        let mut u_s = 0.0;
        let mut u_u = 0.0;
        for j in 0..v {
            let u = t_row[j] * inv_norm;
            u_sc += u * s_c[j];
            u_s += u * stats.s_all[j];
            u_u += u * u;
        }
        let dot = sc.wc_scale * (u_sc - u_u) + sc.ac_scale * (u_s - u_sc);
        for j in 0..v {
            let u = t_row[j] * inv_norm;
            let gu = sc.wc_scale * (s_c[j] - u) + sc.ac_scale * (stats.s_all[j] - s_c[j]);
            g[j] += (gu - dot * u) * inv_norm;
        }
    }
    // Softmax backward: g_z = T (g - <g, T>).
    let mut dot_t = 0.0;
    for j in 0..v {
        dot_t += g[j] * t_row[j];
    }
    for j in 0..v {
        g[j] = t_row[j] * (g[j] - dot_t);
    }
}

fn validate_pi(pi: &[f64], v: usize) -> Result<()> {
    if pi.len() != v {
        return Err(Error::Param(format!("pi length {} != vocab {v}", pi.len())));
    }
    if pi.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::Param("pi entries must be finite and non-negative".into()));
    }
    let sum: f64 = pi.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Param(format!("pi sums to {sum}, expected 1")));
    }
    Ok(())
}

fn validate_z(z: &[f64], v: usize) -> Result<()> {
    if z.len() != v * v {
        return Err(Error::Param(format!("logits length {} != vocab^2 {}", z.len(), v * v)));
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::Param("logits must be finite".into()));
    }
    Ok(())
}

/// Loss of row-major logits `z` under a frozen stationary estimate `pi`:
/// exactly the objective one optimizer step sees.
pub fn loss_given_pi(z: &[f64], pi: &[f64], targets: &MatrixTargets) -> Result<LossTerms> {
    targets.validate()?;
    let v = targets.marginal.vocab_size;
    validate_z(z, v)?;
    validate_pi(pi, v)?;
    let p_target = target_marginal(&targets.marginal)?;
    let mut fw = Forward::new(v);
    fw.compute(z);
    let stats = stats_pass(&fw, pi, &p_target, &targets.categories)?;
    Ok(terms_of(&stats, targets))
}

/// Exact gradient of [`loss_given_pi`] with respect to the logits,
/// row-major, computed by the same passes the optimizer runs.
pub fn grad_given_pi(z: &[f64], pi: &[f64], targets: &MatrixTargets) -> Result<Vec<f64>> {
    targets.validate()?;
    let v = targets.marginal.vocab_size;
    validate_z(z, v)?;
    validate_pi(pi, v)?;
    let p_target = target_marginal(&targets.marginal)?;
    let mut fw = Forward::new(v);
    fw.compute(z);
    let stats = stats_pass(&fw, pi, &p_target, &targets.categories)?;
    let sc = GradScalars::new(&stats, targets);
    let mut grad = vec![0.0; v * v];
    let mut g = vec![0.0; v];
    for i in 0..v {
        row_grad(&fw, &stats, &sc, &targets.categories, &p_target, z, pi[i], i, &mut g);
        grad[i * v..(i + 1) * v].copy_from_slice(&g);
    }
    Ok(grad)
}

/// Runs the optimization and returns the matrix with its report.
/// Deterministic in all inputs; aborts with the offending step's raw terms
/// if the loss stops being finite.
pub fn optimize(targets: &MatrixTargets) -> Result<(TransitionMatrix, OptimizationReport)> {
    targets.validate()?;
    let v = targets.marginal.vocab_size;
    let p_target = target_marginal(&targets.marginal)?;
    let mut rng = root_rng(targets.seed);
    let normal = Normal::new(0.0, INIT_LOGIT_STD).expect("positive std");
    let mut z: Vec<f64> = (0..v * v).map(|_| normal.sample(&mut rng)).collect();
    let mut fw = Forward::new(v);
    let mut pi = vec![1.0 / v as f64; v];
    // Adam moments are stored single-precision: the update math runs in f64
    // and the state costs half the memory at large vocabularies.
    let mut adam_m = vec![0f32; v * v];
    let mut adam_v = vec![0f32; v * v];
    let mut trace = Vec::with_capacity(targets.steps);
    let mut g = vec![0.0; v];
    let mut b1_pow = 1.0;
    let mut b2_pow = 1.0;
    let lr = targets.learning_rate;
    for step in 0..targets.steps {
        fw.compute(&z);
        refine_stationary(&fw.t, v, &mut pi, PI_REFINE_ITERS, DEFAULT_TOL);
        let stats = stats_pass(&fw, &pi, &p_target, &targets.categories)?;
        let terms = terms_of(&stats, targets);
        if !terms.is_finite() {
            return Err(Error::DivergentLoss { step, terms: terms.raw_array() });
        }
        trace.push(terms);
        let sc = GradScalars::new(&stats, targets);
        b1_pow *= ADAM_BETA1;
        b2_pow *= ADAM_BETA2;
        let inv_b1 = 1.0 / (1.0 - b1_pow);
        let inv_b2 = 1.0 / (1.0 - b2_pow);
        for (i, &pi_i) in pi.iter().enumerate() {
            row_grad(&fw, &stats, &sc, &targets.categories, &p_target, &z, pi_i, i, &mut g);
            let base = i * v;
            for (j, &gg) in g.iter().enumerate() {
                let idx = base + j;
                let m_new = ADAM_BETA1 * adam_m[idx] as f64 + (1.0 - ADAM_BETA1) * gg;
                let v_new = ADAM_BETA2 * adam_v[idx] as f64 + (1.0 - ADAM_BETA2) * gg * gg;
                adam_m[idx] = m_new as f32;
                adam_v[idx] = v_new as f32;
                z[idx] -= lr * (m_new * inv_b1) / ((v_new * inv_b2).sqrt() + ADAM_EPS);
            }
        }
    }
    fw.compute(&z);
    drop(z);
    drop(adam_m);
    drop(adam_v);
    let matrix = TransitionMatrix::from_rows(v, std::mem::take(&mut fw.t))?;
    let final_stats = matrix_stats(&matrix, targets)?;
    Ok((matrix, OptimizationReport { trace, final_stats }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::MarginalShape;

    fn small_targets(v: usize, ncat: usize, seed: u64) -> MatrixTargets {
        MatrixTargets::new(
            MarginalSpec::zipf(v),
            CategoryAssignment::equal_blocks(v, ncat).unwrap(),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn default_entropy_target_caps_at_six_point_two() {
        assert!((default_entropy_target(64) - 5.0).abs() < 1e-12);
        assert!((default_entropy_target(1000) - 6.2).abs() < 1e-12);
        assert!((default_entropy_target(10_000) - 6.2).abs() < 1e-12);
    }

    #[test]
    fn validates_targets() {
        let cat = CategoryAssignment::equal_blocks(8, 2).unwrap();
        let bad_vocab = MatrixTargets::new(MarginalSpec::zipf(10), cat.clone(), 0);
        assert!(bad_vocab.is_err());
        let singles = CategoryAssignment::equal_blocks(8, 8).unwrap();
        assert!(MatrixTargets::new(MarginalSpec::zipf(8), singles, 0).is_err());
        let mut t = MatrixTargets::new(MarginalSpec::zipf(8), cat, 0).unwrap();
        t.weights.marginal = -1.0;
        assert!(t.validate().is_err());
    }

    #[test]
    fn minus_d_matrix_tiles_the_marginal() {
        let spec = MarginalSpec::zipf(8);
        let p = target_marginal(&spec).unwrap();
        let t = build_minus_d_matrix(&spec).unwrap();
        for i in 0..8 {
            for (j, &pj) in p.iter().enumerate() {
                assert!((t.get(i, j) - pj).abs() < 1e-15);
            }
        }
        // Identical rows make conditional entropy the row entropy and the
        // stationary marginal the row itself.
        let pi = stationary_or_average(&t);
        let h = conditional_entropy(&t, &pi);
        let h_row: f64 = -p.iter().map(|&x| x * x.log2()).sum::<f64>();
        assert!((h - h_row).abs() < 1e-12);
        for (&stat, &pj) in pi.pi().iter().zip(&p) {
            assert!((stat - pj).abs() < 1e-10);
        }
    }

    #[test]
    fn loss_terms_on_uniform_matrix_by_hand() {
        let v = 4;
        let mut targets = MatrixTargets::new(
            MarginalSpec::uniform(v),
            CategoryAssignment::equal_blocks(v, 2).unwrap(),
            0,
        )
        .unwrap();
        targets.entropy_target = 1.0;
        let t = TransitionMatrix::from_identical_rows(&[0.25; 4]).unwrap();
        let terms = loss_terms(&t, &targets).unwrap();
        // KL 0; H = 2 so gap^2 = 1; peak 0.25; similarities both exactly 1
        // (all unit rows identical) so gaps are 0.36 and 0.81.
        assert!(terms.marginal_kl.abs() < 1e-12);
        assert!((terms.entropy_gap_sq - 1.0).abs() < 1e-12);
        assert!((terms.peakedness - 0.25).abs() < 1e-12);
        assert!((terms.within_gap_sq - 0.36).abs() < 1e-9);
        assert!((terms.across_gap_sq - 0.81).abs() < 1e-9);
        let expect = 100.0 * 0.0 + 0.01 * 1.0 + 0.1 * 0.25 + 5.0 * 0.36 + 5.0 * 0.81;
        assert!((terms.total - expect).abs() < 1e-8);
    }

    #[test]
    fn frozen_pi_loss_matches_audit_loss_at_stationarity() {
        // For logits of a -D matrix the stationary estimate is the marginal
        // itself, so the frozen and self-consistent losses agree.
        let v = 8;
        let targets = small_targets(v, 2, 0);
        let t = build_minus_d_matrix(&targets.marginal).unwrap();
        let z: Vec<f64> = t.data().iter().map(|&x| x.ln()).collect();
        let pi = stationary_or_average(&t).into_vec();
        let frozen = loss_given_pi(&z, &pi, &targets).unwrap();
        let audit = loss_terms(&t, &targets).unwrap();
        assert!((frozen.total - audit.total).abs() < 1e-8);
        assert!((frozen.marginal_kl - audit.marginal_kl).abs() < 1e-10);
        assert!((frozen.entropy_gap_sq - audit.entropy_gap_sq).abs() < 1e-8);
    }

    #[test]
    fn optimize_improves_and_is_deterministic() {
        let mut targets = small_targets(20, 2, 11);
        targets.steps = 60;
        let (a, ra) = optimize(&targets).unwrap();
        let (b, rb) = optimize(&targets).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(ra.trace.len(), 60);
        assert!(ra.trace.iter().all(|t| t.total.is_finite()));
        assert!(ra.trace.last().unwrap().total < ra.trace[0].total);
        assert_eq!(ra.final_stats, rb.final_stats);
        let mut other = targets.clone();
        other.seed = 12;
        let (c, _) = optimize(&other).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn zero_weights_leave_the_init_untouched() {
        let mut targets = small_targets(10, 2, 5);
        targets.weights =
            LossWeights { marginal: 0.0, entropy: 0.0, peakedness: 0.0, within: 0.0, across: 0.0 };
        targets.steps = 5;
        let (a, _) = optimize(&targets).unwrap();
        targets.steps = 0;
        let (b, _) = optimize(&targets).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn gaussian_marginal_targets_are_accepted() {
        let v = 20;
        let targets = MatrixTargets::new(
            MarginalSpec::gaussian(v),
            CategoryAssignment::equal_blocks(v, 2).unwrap(),
            3,
        )
        .unwrap();
        assert_eq!(targets.marginal.shape, MarginalShape::Gaussian);
        assert!(loss_terms(&build_minus_d_matrix(&targets.marginal).unwrap(), &targets).is_ok());
    }
}
