use crate::markov::TransitionMatrix;
use crate::{Error, Result};

/// Disjoint, jointly exhaustive, equal-sized token categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryAssignment {
    num_categories: usize,
    /// `membership[token] = category`.
    membership: Vec<u32>,
}

impl CategoryAssignment {
    /// Splits `0..vocab_size` into `num_categories` contiguous equal blocks.
    pub fn equal_blocks(vocab_size: usize, num_categories: usize) -> Result<Self> {
        if num_categories == 0 || vocab_size == 0 {
            return Err(Error::Param("vocab and category counts must be positive".into()));
        }
        if !vocab_size.is_multiple_of(num_categories) {
            return Err(Error::Param(format!(
                "vocab {vocab_size} not divisible into {num_categories} equal categories"
            )));
        }
        let per = vocab_size / num_categories;
        let membership = (0..vocab_size).map(|t| (t / per) as u32).collect();
        Ok(Self { num_categories, membership })
    }

    /// Validates an explicit token -> category map: every category in range
    /// and exactly `vocab/num_categories` tokens per category.
    pub fn from_membership(num_categories: usize, membership: Vec<u32>) -> Result<Self> {
        if num_categories == 0 || membership.is_empty() {
            return Err(Error::Param("vocab and category counts must be positive".into()));
        }
        if !membership.len().is_multiple_of(num_categories) {
            return Err(Error::Param(format!(
                "vocab {} not divisible into {num_categories} equal categories",
                membership.len()
            )));
        }
        let per = membership.len() / num_categories;
        let mut counts = vec![0usize; num_categories];
        for (tok, &c) in membership.iter().enumerate() {
            let c = c as usize;
            if c >= num_categories {
                return Err(Error::Invalid(format!(
                    "token {tok} assigned to category {c}, but only {num_categories} exist"
                )));
            }
            counts[c] += 1;
        }
        if counts.iter().any(|&n| n != per) {
            return Err(Error::Invalid(format!(
                "categories must be equal-sized ({per} tokens each), got {counts:?}"
            )));
        }
        Ok(Self { num_categories, membership })
    }

    pub fn num_categories(&self) -> usize {
        self.num_categories
    }

    pub fn vocab_size(&self) -> usize {
        self.membership.len()
    }

    pub fn category_of(&self, token: usize) -> usize {
        self.membership[token] as usize
    }

    pub fn tokens_per_category(&self) -> usize {
        self.membership.len() / self.num_categories
    }

    pub fn membership(&self) -> &[u32] {
        &self.membership
    }
}

/// Mean pairwise cosine similarity between transition rows, split into
/// same-category pairs and different-category pairs.
///
/// Computed via the sum-vector identity: with unit rows `u_i` and per-category
/// sums `S_c`, the ordered within-pair similarity total is
/// `sum_c (|S_c|^2 - sum_{i in c} |u_i|^2)` and the across total is
/// `|S|^2 - sum_c |S_c|^2`, which avoids the quadratic pair loop. Errors on a
/// zero row (cosine undefined).
pub fn category_similarities(
    t: &TransitionMatrix,
    cat: &CategoryAssignment,
) -> Result<(f64, f64)> {
    let v = t.vocab_size();
    if cat.vocab_size() != v {
        return Err(Error::Invalid(format!(
            "assignment covers {} tokens, matrix has {v}",
            cat.vocab_size()
        )));
    }
    if v < 2 {
        return Err(Error::Param("need at least 2 rows for pairwise similarity".into()));
    }
    let ncat = cat.num_categories;
    let mut s_all = vec![0.0; v];
    let mut s_cat = vec![0.0; v * ncat];
    // Unit-row self-products per category; exactly 1 per row up to rounding.
    let mut diag = vec![0.0; ncat];
    let mut counts = vec![0usize; ncat];
    let mut unit = vec![0.0; v];
    for i in 0..v {
        let row = t.row(i);
        let norm_sq: f64 = row.iter().map(|x| x * x).sum();
        if norm_sq == 0.0 {
            return Err(Error::Invalid(format!("row {i} is zero; cosine undefined")));
        }
        let inv = 1.0 / norm_sq.sqrt();
        let mut self_dot = 0.0;
        for (u, &x) in unit.iter_mut().zip(row) {
            *u = x * inv;
            self_dot += *u * *u;
        }
        let c = cat.category_of(i);
        counts[c] += 1;
        diag[c] += self_dot;
        let block = &mut s_cat[c * v..(c + 1) * v];
        for ((sa, sb), &u) in s_all.iter_mut().zip(block.iter_mut()).zip(&unit) {
            *sa += u;
            *sb += u;
        }
    }
    let norm_sq = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>();
    let s_all_sq = norm_sq(&s_all);
    let mut within_total = 0.0;
    let mut cat_sq_total = 0.0;
    let mut n_within = 0usize;
    for c in 0..ncat {
        let sq = norm_sq(&s_cat[c * v..(c + 1) * v]);
        cat_sq_total += sq;
        within_total += sq - diag[c];
        n_within += counts[c] * (counts[c] - 1);
    }
    let n_across = v * v - counts.iter().map(|&n| n * n).sum::<usize>();
    if n_within == 0 || n_across == 0 {
        return Err(Error::Param(
            "assignment leaves no within- or across-category pairs".into(),
        ));
    }
    let within = within_total / n_within as f64;
    let across = (s_all_sq - cat_sq_total) / n_across as f64;
    Ok((within, across))
}
