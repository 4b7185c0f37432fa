use crate::{Error, Result};

/// Default iteration cap for [`stationary_distribution`].
pub const DEFAULT_MAX_ITERS: usize = 10_000;
/// Default residual tolerance for [`stationary_distribution`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Row sums may drift from 1 by at most this much.
const ROW_SUM_TOL: f64 = 1e-9;

/// Row-stochastic |V|x|V| matrix over token IDs: row `i` is the next-token
/// distribution given token `i`.
///
/// Immutable after construction; construction validates that every entry lies
/// in [0, 1] and every row sums to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    vocab_size: usize,
    data: Vec<f64>, // row-major, len = vocab_size^2
}

impl TransitionMatrix {
    /// Builds a matrix from row-major data, validating stochasticity.
    pub fn from_rows(vocab_size: usize, data: Vec<f64>) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::Param("vocab_size must be positive".into()));
        }
        if data.len() != vocab_size * vocab_size {
            return Err(Error::Invalid(format!(
                "expected {} entries for vocab {}, got {}",
                vocab_size * vocab_size,
                vocab_size,
                data.len()
            )));
        }
        for (i, row) in data.chunks_exact(vocab_size).enumerate() {
            let mut sum = 0.0;
            for (j, &x) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::Invalid(format!("entry [{i},{j}] = {x} outside [0,1]")));
                }
                sum += x;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Invalid(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(Self { vocab_size, data })
    }

    /// Builds a matrix whose every row equals `row`.
    pub fn from_identical_rows(row: &[f64]) -> Result<Self> {
        let v = row.len();
        let mut data = Vec::with_capacity(v * v);
        for _ in 0..v {
            data.extend_from_slice(row);
        }
        Self::from_rows(v, data)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Row `i` as a probability vector.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.vocab_size..(i + 1) * self.vocab_size]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.vocab_size + j]
    }

    /// Full row-major backing slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Unigram distribution fixed by the transition matrix: `pi T = pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.pi
    }

    /// Wraps a caller-supplied distribution without verifying the fixed-point
    /// property; the slice must be a probability vector.
    pub fn from_vec(pi: Vec<f64>) -> Result<Self> {
        let sum: f64 = pi.iter().sum();
        if pi.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("not a probability vector".into()));
        }
        Ok(Self { pi })
    }
}

/// One left-multiplication `out = pi T`, sequential row-major accumulation.
fn left_mul(data: &[f64], v: usize, pi: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, row) in data.chunks_exact(v).enumerate() {
        let w = pi[i];
        if w == 0.0 {
            continue;
        }
        for (o, &t) in out.iter_mut().zip(row) {
            *o += w * t;
        }
    }
}

/// Power iteration on raw row-major data starting from `init`.
///
/// Returns `(pi, iters_used, residual)` where `residual = max_j |pi T - pi|_j`
/// is verified for the returned vector.
pub(crate) fn stationary_raw(
    data: &[f64],
    v: usize,
    init: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<f64>, usize, f64)> {
    let mut pi = init.to_vec();
    let mut next = vec![0.0; v];
    let mut residual = f64::INFINITY;
    for it in 0..max_iters {
        left_mul(data, v, &pi, &mut next);
        residual = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < tol {
            // `pi` is the vector whose residual was just verified.
            return Ok((pi, it, residual));
        }
        let sum: f64 = next.iter().sum();
        for x in &mut next {
            *x /= sum;
        }
        std::mem::swap(&mut pi, &mut next);
    }
    Err(Error::NonConvergence { iters: max_iters, residual })
}

/// Refines a stationary estimate in place by power iteration and reports the
/// last residual. Never fails: on hitting `max_iters` the caller keeps the
/// newest iterate (whose residual is that of its predecessor), which is the
/// right contract for a running estimate that the next call keeps improving.
pub(crate) fn refine_stationary(
    data: &[f64],
    v: usize,
    pi: &mut Vec<f64>,
    max_iters: usize,
    tol: f64,
) -> f64 {
    let mut next = vec![0.0; v];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        left_mul(data, v, pi, &mut next);
        residual = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < tol {
            return residual;
        }
        let sum: f64 = next.iter().sum();
        for x in &mut next {
            *x /= sum;
        }
        std::mem::swap(pi, &mut next);
    }
    residual
}

/// Stationary distribution by left power iteration from the uniform vector.
///
/// Errors with [`Error::NonConvergence`] (carrying the last residual) if the
/// chain does not settle within `max_iters`, e.g. for periodic chains.
pub fn stationary_distribution(
    t: &TransitionMatrix,
    max_iters: usize,
    tol: f64,
) -> Result<StationaryDistribution> {
    let v = t.vocab_size;
    let init = vec![1.0 / v as f64; v];
    let (pi, _, _) = stationary_raw(&t.data, v, &init, max_iters, tol)?;
    Ok(StationaryDistribution { pi })
}

/// Stationary distribution if power iteration converges, otherwise the
/// Cesaro average of the iterates (well-defined for any stochastic matrix,
/// e.g. uniform for a deterministic cycle).
pub fn stationary_or_average(t: &TransitionMatrix) -> StationaryDistribution {
    let v = t.vocab_size;
    let mut pi = vec![1.0 / v as f64; v];
    let mut next = vec![0.0; v];
    let mut avg = vec![0.0; v];
    for _ in 0..DEFAULT_MAX_ITERS {
        left_mul(&t.data, v, &pi, &mut next);
        let residual = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < DEFAULT_TOL {
            return StationaryDistribution { pi };
        }
        for (a, &x) in avg.iter_mut().zip(&next) {
            *a += x;
        }
        let sum: f64 = next.iter().sum();
        for x in &mut next {
            *x /= sum;
        }
        std::mem::swap(&mut pi, &mut next);
    }
    let sum: f64 = avg.iter().sum();
    for x in &mut avg {
        *x /= sum;
    }
    StationaryDistribution { pi: avg }
}

/// Conditional entropy `H = sum_i pi[i] * H(row_i)` in bits, with
/// `0 * log(1/0)` treated as 0.
///
/// `pi` should be the stationary distribution of `t`; the value is a plain
/// weighted row-entropy sum for whatever weights are passed.
pub fn conditional_entropy(t: &TransitionMatrix, pi: &StationaryDistribution) -> f64 {
    let v = t.vocab_size;
    let mut h = 0.0;
    for (i, row) in t.data.chunks_exact(v).enumerate() {
        let w = pi.pi[i];
        if w == 0.0 {
            continue;
        }
        let mut row_h = 0.0;
        for &x in row {
            if x > 0.0 {
                row_h -= x * x.log2();
            }
        }
        h += w * row_h;
    }
    h
}
