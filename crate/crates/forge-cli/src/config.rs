//! JSON configuration schemas. Unknown keys are rejected everywhere so a
//! typo in a sweep file fails loudly instead of silently running defaults.

use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use forge_core::markov::{CategoryAssignment, MarginalSpec};
use forge_core::optim::{LossWeights, MatrixTargets};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub marginal: f64,
    pub entropy: f64,
    pub peakedness: f64,
    pub within: f64,
    pub across: f64,
}

impl From<&WeightsConfig> for LossWeights {
    fn from(w: &WeightsConfig) -> Self {
        LossWeights {
            marginal: w.marginal,
            entropy: w.entropy,
            peakedness: w.peakedness,
            within: w.within,
            across: w.across,
        }
    }
}

/// Mirrors the optimizer's target struct; omitted fields take the library
/// defaults. `identical_rows: true` skips optimization entirely and emits
/// the no-local-dependency matrix (every row equals the target marginal).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub vocab_size: usize,
    /// "uniform" | "zipf" | "gaussian"
    pub marginal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zipf_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_mean_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_std_rank: Option<f64>,
    #[serde(default = "default_num_categories")]
    pub num_categories: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub across_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub identical_rows: bool,
}

fn default_num_categories() -> usize {
    10
}

impl OptimizeConfig {
    pub fn marginal_spec(&self) -> Result<MarginalSpec> {
        let mut spec = match self.marginal.as_str() {
            "uniform" => MarginalSpec::uniform(self.vocab_size),
            "zipf" => MarginalSpec::zipf(self.vocab_size),
            "gaussian" => MarginalSpec::gaussian(self.vocab_size),
            other => bail!("unknown marginal {other:?} (uniform | zipf | gaussian)"),
        };
        if let Some(s) = self.zipf_exponent {
            if self.marginal != "zipf" {
                bail!("zipf_exponent only applies to the zipf marginal");
            }
            spec = spec.with_zipf_exponent(s);
        }
        match (self.gaussian_mean_rank, self.gaussian_std_rank) {
            (None, None) => {}
            (Some(m), Some(s)) => {
                if self.marginal != "gaussian" {
                    bail!("gaussian_*_rank only applies to the gaussian marginal");
                }
                spec = spec.with_gaussian_params(m, s);
            }
            _ => bail!("gaussian_mean_rank and gaussian_std_rank must be given together"),
        }
        Ok(spec)
    }

    pub fn to_targets(&self) -> Result<MatrixTargets> {
        let categories = CategoryAssignment::equal_blocks(self.vocab_size, self.num_categories)?;
        let mut t = MatrixTargets::new(self.marginal_spec()?, categories, self.seed)?;
        if let Some(h) = self.entropy_target {
            t.entropy_target = h;
        }
        if let Some(w) = self.within_target {
            t.within_target = w;
        }
        if let Some(a) = self.across_target {
            t.across_target = a;
        }
        if let Some(w) = &self.weights {
            t.weights = w.into();
        }
        if let Some(s) = self.steps {
            t.steps = s;
        }
        if let Some(lr) = self.learning_rate {
            t.learning_rate = lr;
        }
        t.validate()?;
        Ok(t)
    }
}

/// Sweep over a grid; cells run independently and the summary is assembled
/// in cell-index order (row-major over the axes as listed).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum SweepConfig {
    /// alpha x beta grid of corpora over one matrix.
    Corpus(CorpusSweep),
    /// marginal x structure grid of matrix builds.
    Matrix(Box<MatrixSweep>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSweep {
    pub matrix: PathBuf,
    pub ctx_size: usize,
    pub chunks_per_cell: usize,
    #[serde(default)]
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSweep {
    /// Template; per-cell marginal/structure/seed are overridden.
    pub base: OptimizeConfig,
    /// Axis 1: marginal shapes ("uniform" | "zipf" | "gaussian").
    pub marginals: Vec<String>,
    /// Axis 2: "+d+c" (optimized, separated similarity targets),
    /// "+d-c" (optimized, equal low similarity targets), or
    /// "-d" (identical rows, no optimization).
    pub structures: Vec<String>,
    #[serde(default = "default_plus_c_within")]
    pub plus_c_within: f64,
    #[serde(default = "default_minus_c_within")]
    pub minus_c_within: f64,
    #[serde(default = "default_across")]
    pub across: f64,
}

fn default_plus_c_within() -> f64 {
    0.4
}
fn default_minus_c_within() -> f64 {
    0.1
}
fn default_across() -> f64 {
    0.1
}

pub fn load_config<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}
