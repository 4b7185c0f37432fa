//! Synthesis and measurement toolkit for Markov-process pretraining data.
//!
//! The crate covers four areas:
//!
//! - [`markov`]: row-stochastic transition matrices, stationary distributions,
//!   conditional entropy, target marginal shapes, and category similarity
//!   statistics.
//! - [`optim`]: gradient-based synthesis of transition matrices that hit a
//!   target marginal shape, entropy, peakedness, and categoriality.
//! - [`corpus`] / [`ngram`]: constrained sequence generation with controlled
//!   bigram-repetition frequency and reliability, plus the measurement side
//!   (repetition statistics, chunk histograms, bigram-count ingestion).
//! - [`induction`] / [`law`]: prefix scores over externally produced attention
//!   dumps, the random-attention significance threshold, and the
//!   phase-transition law `U = T/sqrt(BC)` (changepoint fitting, scaling-law
//!   regression, token-axis transforms).
//!
//! Everything is deterministic given its seeds; no global state.

pub mod corpus;
mod error;
pub mod induction;
pub mod law;
pub mod markov;
pub mod ngram;
pub mod optim;
pub mod rng;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
