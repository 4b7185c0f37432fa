use crate::{Error, Result};

/// Shape family for the target unigram distribution, ordered from most to
/// least uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalShape {
    Uniform,
    Gaussian,
    Zipfian,
}

/// Target marginal specification. Token IDs double as ranks: ID 0 is rank 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSpec {
    pub shape: MarginalShape,
    pub vocab_size: usize,
    /// Zipf exponent `s` in `rank^-s`.
    pub zipf_exponent: f64,
    /// Mean of the rank-space normal density.
    pub gaussian_mean_rank: f64,
    /// Standard deviation of the rank-space normal density.
    pub gaussian_std_rank: f64,
}

impl MarginalSpec {
    pub fn uniform(vocab_size: usize) -> Self {
        Self::new(MarginalShape::Uniform, vocab_size)
    }

    /// Classic Zipf, exponent 1.
    pub fn zipf(vocab_size: usize) -> Self {
        Self::new(MarginalShape::Zipfian, vocab_size)
    }

    /// Rank-space Gaussian with the default interior placement
    /// (mean |V|/2, std |V|/6).
    pub fn gaussian(vocab_size: usize) -> Self {
        Self::new(MarginalShape::Gaussian, vocab_size)
    }

    pub fn new(shape: MarginalShape, vocab_size: usize) -> Self {
        Self {
            shape,
            vocab_size,
            zipf_exponent: 1.0,
            gaussian_mean_rank: vocab_size as f64 / 2.0,
            gaussian_std_rank: vocab_size as f64 / 6.0,
        }
    }

    pub fn with_zipf_exponent(mut self, s: f64) -> Self {
        self.zipf_exponent = s;
        self
    }

    pub fn with_gaussian_params(mut self, mean_rank: f64, std_rank: f64) -> Self {
        self.gaussian_mean_rank = mean_rank;
        self.gaussian_std_rank = std_rank;
        self
    }
}

/// Realizes the target unigram distribution of `spec`.
///
/// Uniform: 1/|V| each. Zipfian: `rank^-s` normalized. Gaussian: the normal
/// density evaluated at ranks 1..|V|, normalized. All entries are strictly
/// positive and the vector sums to 1 within 1e-12.
pub fn target_marginal(spec: &MarginalSpec) -> Result<Vec<f64>> {
    let v = spec.vocab_size;
    if v == 0 {
        return Err(Error::Param("vocab_size must be positive".into()));
    }
    let mut p = match spec.shape {
        MarginalShape::Uniform => vec![1.0 / v as f64; v],
        MarginalShape::Zipfian => {
            if spec.zipf_exponent <= 0.0 {
                return Err(Error::Param(format!(
                    "zipf_exponent must be positive, got {}",
                    spec.zipf_exponent
                )));
            }
            (1..=v)
                .map(|rank| (rank as f64).powf(-spec.zipf_exponent))
                .collect()
        }
        MarginalShape::Gaussian => {
            if spec.gaussian_std_rank <= 0.0 {
                return Err(Error::Param(format!(
                    "gaussian_std_rank must be positive, got {}",
                    spec.gaussian_std_rank
                )));
            }
            (1..=v)
                .map(|rank| {
                    let z = (rank as f64 - spec.gaussian_mean_rank) / spec.gaussian_std_rank;
                    (-0.5 * z * z).exp()
                })
                .collect()
        }
    };
    let sum: f64 = p.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::Param("degenerate marginal: weights sum to zero or overflow".into()));
    }
    for x in &mut p {
        *x /= sum;
    }
    Ok(p)
}

/// KL divergence `sum_i p_i * log2(p_i / q_i)` in bits.
///
/// Zero `p` entries contribute 0; a zero `q` entry under positive `p` mass is
/// an infinite divergence and errors.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Invalid(format!(
            "length mismatch: p has {}, q has {}",
            p.len(),
            q.len()
        )));
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi < 0.0 || qi < 0.0 {
            return Err(Error::Invalid(format!("negative entry at index {i}")));
        }
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::DivergentKl { index: i });
        }
        kl += pi * (pi / qi).log2();
    }
    Ok(kl)
}
