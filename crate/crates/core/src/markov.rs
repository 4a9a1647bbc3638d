//! Analytical engine for single-relevant-item rankings.
//!
//! States z^1..z^K place the one relevant item at rank 1..K. One RTL pass over
//! the full list moves between states with probabilities determined by the
//! swap parameters (μ, ν): the relevant item is demoted one rank with
//! probability μ, or carried left by a run of good swaps, each with
//! probability ν. The resulting row-stochastic transition matrix is
//!
//! ```text
//! T[i][j] = 0                      j > i+1, i < K   (unreachable)
//!         = μ                      j = i+1, i < K   (one bad swap)
//!         = (1-μ)(1-ν)ν^(i-j)      1 < j <= i < K   (carry, then stall)
//!         = (1-ν)ν^(K-j)           1 < j <= i = K   (no bad-swap exposure)
//!         = (1-μ)ν^(i-1)           j = 1, i < K     (carried to the top)
//!         = ν^(K-1)                j = 1, i = K
//! ```
//!
//! Expected metrics push a state distribution π through the chain: E = πT^pΔ.
//! The gain of one extra pass is G = π(T−I)Δ, a bivariate polynomial of degree
//! K−1 in (μ, ν) that decomposes into order-graded components G_1..G_{K-1};
//! every component is positive when μ·π_i < ν·π_{i+1} for all i, which is the
//! sufficient positive-gain condition checked here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricFamily, MetricSpec};

/// Row-stochastic K×K transition matrix of one full-list RTL pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    k: usize,
    mu: f64,
    nu: f64,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds the matrix for `k` states and swap probabilities (μ, ν).
    pub fn build(k: usize, mu: f64, nu: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::contract(format!("transition matrix needs K >= 2, got {k}")));
        }
        for (name, value) in [("mu", mu), ("nu", nu)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::contract(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        let mut entries = vec![0.0; k * k];
        for i in 1..=k {
            for j in 1..=k {
                entries[(i - 1) * k + (j - 1)] = transition_entry(k, i, j, mu, nu);
            }
        }
        let matrix = TransitionMatrix { k, mu, nu, entries };
        debug_assert!(matrix
            .rows()
            .all(|row| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-12));
        Ok(matrix)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Entry T[i][j] with 0-based indices.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.k)
    }

    /// One pushforward π ↦ πT.
    pub fn apply(&self, pi: &StateDistribution) -> StateDistribution {
        let mut out = vec![0.0; self.k];
        for (i, &mass) in pi.as_slice().iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (j, &t) in self.row(i).iter().enumerate() {
                out[j] += mass * t;
            }
        }
        StateDistribution { pi: out }
    }

    /// πT^n by repeated multiplication (K is small; exactness over cleverness).
    pub fn apply_n(&self, pi: &StateDistribution, n: u32) -> StateDistribution {
        let mut current = pi.clone();
        for _ in 0..n {
            current = self.apply(&current);
        }
        current
    }
}

/// Eq-style case analysis for T[i][j], 1-based indices.
fn transition_entry(k: usize, i: usize, j: usize, mu: f64, nu: f64) -> f64 {
    if j > i + 1 && i < k {
        0.0
    } else if j == i + 1 && i < k {
        mu
    } else if (1 < j && j <= i) && (1 < i && i < k) {
        (1.0 - mu) * (1.0 - nu) * nu.powi((i - j) as i32)
    } else if (1 < j && j <= i) && i == k {
        (1.0 - nu) * nu.powi((k - j) as i32)
    } else if j == 1 && i < k {
        (1.0 - mu) * nu.powi((i - 1) as i32)
    } else {
        // j == 1 && i == k
        nu.powi((k - 1) as i32)
    }
}

/// Probability vector over the states z^1..z^K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    pi: Vec<f64>,
}

impl StateDistribution {
    /// Validates non-negativity and unit mass (within 1e-9 slack for hand
    /// inputs; internally produced vectors are far tighter).
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.len() < 2 {
            return Err(Error::contract("state distribution needs K >= 2"));
        }
        if pi.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::contract("state distribution entries must be finite and >= 0"));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!(
                "state distribution must sum to 1, got {total}"
            )));
        }
        Ok(StateDistribution { pi })
    }

    /// Normalizes a non-negative weight vector into a distribution.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::contract("state distribution needs K >= 2"));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::contract("weights must be finite and >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::contract("weights must have positive total mass"));
        }
        Ok(StateDistribution {
            pi: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Point mass on the state with the relevant item at 1-based `rank`.
    pub fn point_mass(k: usize, rank: usize) -> Result<Self> {
        if k < 2 || rank < 1 || rank > k {
            return Err(Error::contract(format!("point_mass: rank {rank} out of 1..={k}")));
        }
        let mut pi = vec![0.0; k];
        pi[rank - 1] = 1.0;
        Ok(StateDistribution { pi })
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    /// π · Δ.
    pub fn dot(&self, delta: &[f64]) -> Result<f64> {
        if delta.len() != self.pi.len() {
            return Err(Error::LengthMismatch {
                context: "StateDistribution::dot",
                left: self.pi.len(),
                right: delta.len(),
            });
        }
        Ok(self.pi.iter().zip(delta).map(|(p, d)| p * d).sum())
    }
}

/// Expected metric after `passes` full RTL passes: π T^passes Δ. With zero
/// passes this is the pointwise expectation πΔ.
pub fn expected_metric(
    pi: &StateDistribution,
    matrix: &TransitionMatrix,
    delta: &[f64],
    passes: u32,
) -> Result<f64> {
    check_dims(pi, matrix, delta)?;
    matrix.apply_n(pi, passes).dot(delta)
}

/// Expected-metric gain of one extra pass from π: G = π(T−I)Δ.
pub fn gain(pi: &StateDistribution, matrix: &TransitionMatrix, delta: &[f64]) -> Result<f64> {
    check_dims(pi, matrix, delta)?;
    let pushed = matrix.apply(pi);
    Ok(pushed.dot(delta)? - pi.dot(delta)?)
}

fn check_dims(pi: &StateDistribution, matrix: &TransitionMatrix, delta: &[f64]) -> Result<()> {
    if pi.k() != matrix.k() || delta.len() != matrix.k() {
        return Err(Error::LengthMismatch {
            context: "markov dimensions",
            left: pi.k(),
            right: matrix.k(),
        });
    }
    Ok(())
}

/// Status of one positive-gain constraint μ·π_i < ν·π_{i+1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintStatus {
    Satisfied,
    Violated,
    /// π_i = π_{i+1} = 0: the constraint carries no information and
    /// contributes nothing to the gain.
    Vacuous,
}

/// One per-index constraint report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainConstraint {
    /// 1-based state index i of the pair (π_i, π_{i+1}).
    pub index: usize,
    /// The bound ν·π_{i+1}/π_i that μ must stay strictly below; absent when
    /// π_i = 0 (the multiplicative form is still evaluated).
    pub mu_bound: Option<f64>,
    pub status: ConstraintStatus,
}

/// Verdict of the sufficient positive-gain condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainConditionVerdict {
    /// True when every non-vacuous constraint holds strictly. Sufficient for
    /// gain > 0; nothing is claimed when false.
    pub holds: bool,
    pub constraints: Vec<GainConstraint>,
    /// Tightest finite bound on μ and the index attaining it.
    pub tightest_bound: Option<f64>,
    pub binding_index: Option<usize>,
    /// Index of the first violated constraint, when any.
    pub violated_index: Option<usize>,
    /// 1-based indices of vacuous constraints.
    pub vacuous_indices: Vec<usize>,
}

/// Checks the sufficient condition for a positive expected-MRR gain of one RTL
/// pass: μ·π_i < ν·π_{i+1} strictly, for every i = 1..K-1 (evaluated
/// multiplicatively so zero entries need no special-cased division).
pub fn theorem1_check(pi: &StateDistribution, mu: f64, nu: f64) -> Result<GainConditionVerdict> {
    for (name, value) in [("mu", mu), ("nu", nu)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::contract(format!("{name} must lie in [0, 1], got {value}")));
        }
    }
    let p = pi.as_slice();
    let mut constraints = Vec::with_capacity(p.len() - 1);
    let mut tightest: Option<(f64, usize)> = None;
    let mut violated_index = None;
    let mut vacuous_indices = Vec::new();
    for i in 0..p.len() - 1 {
        let index = i + 1;
        let (status, mu_bound) = if p[i] == 0.0 && p[i + 1] == 0.0 {
            vacuous_indices.push(index);
            (ConstraintStatus::Vacuous, None)
        } else {
            let satisfied = mu * p[i] < nu * p[i + 1];
            let bound = (p[i] > 0.0).then(|| nu * p[i + 1] / p[i]);
            if let Some(b) = bound {
                if tightest.map_or(true, |(t, _)| b < t) {
                    tightest = Some((b, index));
                }
            }
            if !satisfied && violated_index.is_none() {
                violated_index = Some(index);
            }
            (
                if satisfied {
                    ConstraintStatus::Satisfied
                } else {
                    ConstraintStatus::Violated
                },
                bound,
            )
        };
        constraints.push(GainConstraint {
            index,
            mu_bound,
            status,
        });
    }
    Ok(GainConditionVerdict {
        holds: violated_index.is_none(),
        constraints,
        tightest_bound: tightest.map(|(b, _)| b),
        binding_index: tightest.map(|(_, i)| i),
        violated_index,
        vacuous_indices,
    })
}

/// The same sufficient condition evaluated after `alpha` passes, i.e. on the
/// pushed-forward distribution πT^alpha; it governs the gain of pass
/// alpha + 1. With alpha = 0 this is exactly [`theorem1_check`].
pub fn corollary_check(
    pi: &StateDistribution,
    matrix: &TransitionMatrix,
    alpha: u32,
    mu: f64,
    nu: f64,
) -> Result<GainConditionVerdict> {
    if pi.k() != matrix.k() {
        return Err(Error::LengthMismatch {
            context: "corollary_check",
            left: pi.k(),
            right: matrix.k(),
        });
    }
    theorem1_check(&matrix.apply_n(pi, alpha), mu, nu)
}

/// Order-graded decomposition of the one-pass MRR gain: component k collects
/// every degree-k term of the polynomial G(μ, ν), so G = Σ_k G_k. Only defined
/// for the MRR discount (the derivation is MRR-specific).
///
/// ```text
/// G_k = Σ_{i=k}^{K-1} (π_{i+1}·ν^k − π_i·μ·ν^(k-1)) / ((i-k+1)(i-k+2))
/// ```
///
/// Computed without building the transition matrix, which keeps it an
/// independent route against the matrix-based [`gain`].
pub fn gain_decomposition(
    pi: &StateDistribution,
    mu: f64,
    nu: f64,
    spec: &MetricSpec,
) -> Result<Vec<f64>> {
    if spec.family != MetricFamily::Mrr {
        return Err(Error::contract(format!(
            "gain_decomposition is derived for MRR only, got {:?}",
            spec.family
        )));
    }
    for (name, value) in [("mu", mu), ("nu", nu)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::contract(format!("{name} must lie in [0, 1], got {value}")));
        }
    }
    let p = pi.as_slice();
    let k = p.len();
    let mut components = Vec::with_capacity(k - 1);
    for order in 1..k {
        let mut g = 0.0;
        let nu_pow = nu.powi(order as i32 - 1);
        for i in order..k {
            // 1-based i runs order..K-1; p[i] is π_{i+1}.
            let weight = ((i - order + 1) * (i - order + 2)) as f64;
            g += (p[i] * nu * nu_pow - p[i - 1] * mu * nu_pow) / weight;
        }
        components.push(g);
    }
    Ok(components)
}
