//! Experiment configuration files (JSON). Unknown keys are rejected so typos
//! fail loudly instead of silently running the wrong experiment. Every field
//! is optional; command-line flags override file values.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rtlrank_core::comparators::OracleParams;
use rtlrank_core::metrics::LogBase;
use rtlrank_core::priors::BetaScorePrior;
use rtlrank_core::strategies::StrategySpec;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub mu: f64,
    pub nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_swap: Option<f64>,
}

impl OracleConfig {
    pub fn to_params(self) -> CliResult<OracleParams> {
        Ok(match self.tie_swap {
            Some(tie) => OracleParams::with_tie_swap(self.mu, self.nu, tie)?,
            None => OracleParams::new(self.mu, self.nu)?,
        })
    }
}

/// (alpha_pos, beta_pos, alpha_neg, beta_neg), mirroring the
/// `--prior a1,b1,a2,b2` flag.
pub type PriorConfig = [f64; 4];

pub fn prior_from_config(values: PriorConfig) -> CliResult<BetaScorePrior> {
    Ok(BetaScorePrior::new(values[0], values[1], values[2], values[3])?)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub k: Option<usize>,
    pub positives: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub quad_tol: Option<f64>,
    pub log_base: Option<LogBase>,
    pub ndcg_cutoffs: Option<Vec<usize>>,
    pub passes: Option<u32>,
    pub top_k: Option<usize>,
    /// Single strategy (rerank/simulate).
    pub strategy: Option<StrategySpec>,
    /// Strategy grid (sweep) or strategy list (rerank).
    pub strategies: Option<Vec<StrategySpec>>,
    pub oracle: Option<OracleConfig>,
    /// Oracle grid (sweep).
    pub oracles: Option<Vec<OracleConfig>>,
    pub prior: Option<PriorConfig>,
    /// Prior grid (sweep).
    pub priors: Option<Vec<PriorConfig>>,
    /// Explicit state distribution (theory).
    pub pi: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let file = File::open(path)
            .map_err(|e| CliError::io(format!("opening config {}", path.display()), e))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }
}
