//! Markov-process core: transition matrices, stationary distributions,
//! conditional entropy, marginal targets, and category similarity statistics.

mod category;
mod marginal;
mod matrix;

pub use category::{category_similarities, CategoryAssignment};
pub use marginal::{kl_divergence, target_marginal, MarginalShape, MarginalSpec};
pub use matrix::{
    conditional_entropy, stationary_distribution, stationary_or_average, StationaryDistribution,
    TransitionMatrix, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};

pub(crate) use matrix::refine_stationary;
