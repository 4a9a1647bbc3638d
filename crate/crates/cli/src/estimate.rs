//! Swap-probability estimation from stored preference strengths.
//!
//! Scans adjacent candidate pairs in their stored order. A (relevant,
//! irrelevant) pair where the model prefers the right item is a would-be bad
//! swap and counts toward μ̂; an (irrelevant, relevant) pair where the model
//! prefers the right item is a would-be good swap and counts toward ν̂.
//! Preference direction comes from Bradley-Terry thresholding of the two
//! per-item strengths.

use serde::{Deserialize, Serialize};

use rtlrank_core::comparators::bradley_terry;
use rtlrank_core::impression::Impression;

use crate::error::{CliError, CliResult};

/// Estimated swap probabilities with pair counts and 95% Wilson intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub mu_hat: f64,
    pub nu_hat: f64,
    pub mu_pairs: u64,
    pub nu_pairs: u64,
    pub mu_wilson_low: f64,
    pub mu_wilson_high: f64,
    pub nu_wilson_low: f64,
    pub nu_wilson_high: f64,
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - spread).max(0.0), (center + spread).min(1.0))
}

/// Estimates (μ, ν) by counting preference directions over adjacent
/// mixed-label candidate pairs that carry preference strengths.
pub fn estimate_oracle_params(impressions: &[Impression]) -> CliResult<OracleEstimate> {
    let mut mu_pairs = 0u64;
    let mut mu_swaps = 0u64;
    let mut nu_pairs = 0u64;
    let mut nu_swaps = 0u64;
    for impression in impressions {
        for pair in impression.candidates().windows(2) {
            let (left, right) = (&pair[0], &pair[1]);
            let (Some(dl), Some(dr)) = (left.pref_strength, right.pref_strength) else {
                continue;
            };
            if left.label == right.label {
                continue;
            }
            // Would the comparator promote the right item?
            let prefers_right = bradley_terry(dr, dl).map_err(CliError::from)? > 0.5;
            if left.label {
                mu_pairs += 1;
                mu_swaps += u64::from(prefers_right);
            } else {
                nu_pairs += 1;
                nu_swaps += u64::from(prefers_right);
            }
        }
    }
    if mu_pairs == 0 || nu_pairs == 0 {
        return Err(CliError::config(format!(
            "cannot estimate swap probabilities: {mu_pairs} (relevant, irrelevant) and \
             {nu_pairs} (irrelevant, relevant) adjacent pairs with preference strengths"
        )));
    }
    let (mu_low, mu_high) = wilson_interval(mu_swaps, mu_pairs);
    let (nu_low, nu_high) = wilson_interval(nu_swaps, nu_pairs);
    Ok(OracleEstimate {
        mu_hat: mu_swaps as f64 / mu_pairs as f64,
        nu_hat: nu_swaps as f64 / nu_pairs as f64,
        mu_pairs,
        nu_pairs,
        mu_wilson_low: mu_low,
        mu_wilson_high: mu_high,
        nu_wilson_low: nu_low,
        nu_wilson_high: nu_high,
    })
}
