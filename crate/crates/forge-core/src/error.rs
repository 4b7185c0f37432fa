use std::fmt;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix, vector, or dump violates a structural invariant.
    Invalid(String),
    /// Caller-supplied parameter out of range.
    Param(String),
    /// Power iteration did not reach the requested tolerance.
    NonConvergence { iters: usize, residual: f64 },
    /// KL divergence is infinite: q has a zero where p has mass.
    DivergentKl { index: usize },
    /// Optimization produced a non-finite loss.
    DivergentLoss { step: usize, terms: [f64; 5] },
    /// Not enough data points for the requested fit.
    InsufficientData(String),
    /// Changepoint fit rejected: no transition in the curve.
    NoTransition(String),
    /// The two-class mixture cannot reach the requested composition.
    InfeasibleMixture { class: &'static str, need: usize, have: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
            Error::Param(msg) => write!(f, "bad parameter: {msg}"),
            Error::NonConvergence { iters, residual } => write!(
                f,
                "power iteration did not converge after {iters} iterations (last residual {residual:e})"
            ),
            Error::DivergentKl { index } => {
                write!(f, "KL divergence is infinite: q[{index}] = 0 but p[{index}] > 0")
            }
            Error::DivergentLoss { step, terms } => write!(
                f,
                "optimization diverged at step {step}: loss terms {terms:?}"
            ),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::NoTransition(msg) => write!(f, "no transition detected: {msg}"),
            Error::InfeasibleMixture { class, need, have } => write!(
                f,
                "mixture infeasible: need {need} {class} chunks, have {have}"
            ),
        }
    }
}

impl std::error::Error for Error {}
