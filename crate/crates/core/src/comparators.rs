//! Pairwise preference sources.
//!
//! Three comparators are provided: the ground-truth-aware stochastic oracle
//! parameterized by swap probabilities (μ, ν), the Bradley-Terry conversion
//! from per-item logit strengths, and a deterministic comparator backed by a
//! table of stored preferences.
//!
//! μ is the probability of a *bad* swap (a relevant-left/irrelevant-right pair
//! gets flipped, moving the relevant item down); ν is the probability of a
//! *good* swap (an irrelevant-left/relevant-right pair gets flipped). Pairs of
//! equal relevance swap with `tie_swap`, which provably never changes
//! the relevance pattern.

use std::collections::HashMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Swap probabilities of the ground-truth-aware stochastic comparator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    /// Probability of swapping a (relevant, irrelevant) adjacent pair.
    pub mu: f64,
    /// Probability of swapping an (irrelevant, relevant) adjacent pair.
    pub nu: f64,
    /// Probability of swapping an equal-relevance pair.
    pub tie_swap: f64,
}

impl OracleParams {
    /// (μ, ν) with the default tie-swap probability of 0.5.
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        Self::with_tie_swap(mu, nu, 0.5)
    }

    pub fn with_tie_swap(mu: f64, nu: f64, tie_swap: f64) -> Result<Self> {
        for (name, value) in [("mu", mu), ("nu", nu), ("tie_swap", tie_swap)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::contract(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        Ok(OracleParams { mu, nu, tie_swap })
    }
}

/// Outcome of one adjacent comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapDecision {
    Swap,
    Keep,
}

impl SwapDecision {
    pub fn is_swap(self) -> bool {
        matches!(self, SwapDecision::Swap)
    }

    pub fn from_bool(swap: bool) -> Self {
        if swap {
            SwapDecision::Swap
        } else {
            SwapDecision::Keep
        }
    }
}

/// Preference probability P(i beats j) from per-item strengths:
/// e^{δ_i} / (e^{δ_i} + e^{δ_j}), computed in the shifted logistic form
/// 1 / (1 + e^{δ_j - δ_i}) so large |δ| cannot overflow.
pub fn bradley_terry(delta_i: f64, delta_j: f64) -> Result<f64> {
    if !delta_i.is_finite() || !delta_j.is_finite() {
        return Err(Error::contract(format!(
            "bradley_terry: strengths must be finite, got ({delta_i}, {delta_j})"
        )));
    }
    Ok(1.0 / (1.0 + (delta_j - delta_i).exp()))
}

/// One uniform variate in [0, 1) from the top 53 bits of a `next_u64` call.
/// Kept in-crate so reproducibility does not hinge on a distribution crate's
/// internals.
pub(crate) fn uniform_f64(rng: &mut (impl RngCore + ?Sized)) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One stochastic adjacent comparison: swaps with probability μ when the pair
/// is (relevant, irrelevant), ν when (irrelevant, relevant), and `tie_swap`
/// otherwise. Draws exactly one uniform variate from `rng` on every call, so
/// stream positions do not depend on the outcome.
pub fn oracle_compare(
    rel_left: bool,
    rel_right: bool,
    params: &OracleParams,
    rng: &mut (impl RngCore + ?Sized),
) -> SwapDecision {
    let threshold = match (rel_left, rel_right) {
        (true, false) => params.mu,
        (false, true) => params.nu,
        _ => params.tie_swap,
    };
    SwapDecision::from_bool(uniform_f64(rng) < threshold)
}

/// Stored pairwise preferences: per-item logit strengths (converted through
/// [`bradley_terry`]) or a full pairwise probability map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreferenceTable {
    strengths: HashMap<String, f64>,
    pairwise: HashMap<(String, String), f64>,
}

impl PreferenceTable {
    pub fn from_strengths<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut strengths = HashMap::new();
        for (id, delta) in entries {
            let id = id.into();
            if !delta.is_finite() {
                return Err(Error::contract(format!(
                    "preference strength for `{id}` must be finite, got {delta}"
                )));
            }
            strengths.insert(id, delta);
        }
        Ok(PreferenceTable {
            strengths,
            pairwise: HashMap::new(),
        })
    }

    /// Builds a table from explicit pairwise probabilities P(a beats b). Both
    /// directions of every pair must be present and complementary within 1e-9.
    pub fn from_pairwise<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((S, S), f64)>,
        S: Into<String>,
    {
        let mut pairwise: HashMap<(String, String), f64> = HashMap::new();
        for ((a, b), p) in entries {
            let key = (a.into(), b.into());
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::contract(format!(
                    "P({} beats {}) must lie in [0, 1], got {p}",
                    key.0, key.1
                )));
            }
            pairwise.insert(key, p);
        }
        for ((a, b), p) in &pairwise {
            let reverse = pairwise.get(&(b.clone(), a.clone())).ok_or_else(|| {
                Error::contract(format!("pairwise map is missing P({b} beats {a})"))
            })?;
            if (p + reverse - 1.0).abs() > 1e-9 {
                return Err(Error::contract(format!(
                    "P({a} beats {b}) + P({b} beats {a}) = {} departs from 1",
                    p + reverse
                )));
            }
        }
        Ok(PreferenceTable {
            strengths: HashMap::new(),
            pairwise,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.strengths.is_empty() && self.pairwise.is_empty()
    }

    /// P(a beats b), from strengths when stored, otherwise from the pairwise
    /// map.
    pub fn prefer_prob(&self, a: &str, b: &str) -> Result<f64> {
        if !self.strengths.is_empty() {
            let da = self.lookup_strength(a)?;
            let db = self.lookup_strength(b)?;
            return bradley_terry(da, db);
        }
        self.pairwise
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .ok_or_else(|| Error::UnknownCandidate { id: a.to_string() })
    }

    fn lookup_strength(&self, id: &str) -> Result<f64> {
        self.strengths
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownCandidate { id: id.to_string() })
    }
}

/// Deterministic comparison against stored preferences: swap iff the right
/// item is strictly preferred, P(right beats left) > 1/2. Exact ties keep the
/// current order. Consumes no randomness.
pub fn table_compare(left_id: &str, right_id: &str, table: &PreferenceTable) -> Result<SwapDecision> {
    let p_right = table.prefer_prob(right_id, left_id)?;
    Ok(SwapDecision::from_bool(p_right > 0.5))
}

/// Object-safe pairwise comparator used by every inference strategy. `compare`
/// answers whether the right-hand item should be promoted over the left.
pub trait PairwiseComparator {
    fn compare(
        &mut self,
        left: &crate::impression::CandidateRecord,
        right: &crate::impression::CandidateRecord,
        rng: &mut dyn RngCore,
    ) -> Result<SwapDecision>;
}

/// The (μ, ν) oracle as a strategy comparator; consults ground-truth labels.
#[derive(Debug, Clone, Copy)]
pub struct OracleComparator {
    pub params: OracleParams,
}

impl OracleComparator {
    pub fn new(params: OracleParams) -> Self {
        OracleComparator { params }
    }
}

impl PairwiseComparator for OracleComparator {
    fn compare(
        &mut self,
        left: &crate::impression::CandidateRecord,
        right: &crate::impression::CandidateRecord,
        rng: &mut dyn RngCore,
    ) -> Result<SwapDecision> {
        Ok(oracle_compare(left.label, right.label, &self.params, rng))
    }
}

/// Table-backed deterministic comparator over candidate ids.
#[derive(Debug, Clone)]
pub struct TableComparator<'a> {
    pub table: &'a PreferenceTable,
}

impl<'a> TableComparator<'a> {
    pub fn new(table: &'a PreferenceTable) -> Self {
        TableComparator { table }
    }
}

impl PairwiseComparator for TableComparator<'_> {
    fn compare(
        &mut self,
        left: &crate::impression::CandidateRecord,
        right: &crate::impression::CandidateRecord,
        _rng: &mut dyn RngCore,
    ) -> Result<SwapDecision> {
        table_compare(&left.id, &right.id, self.table)
    }
}

/// Comparator that prefers whichever candidate carries the higher stored
/// per-record `pref_strength` (Bradley-Terry thresholding); errors when a
/// record has none.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordStrengthComparator;

impl PairwiseComparator for RecordStrengthComparator {
    fn compare(
        &mut self,
        left: &crate::impression::CandidateRecord,
        right: &crate::impression::CandidateRecord,
        _rng: &mut dyn RngCore,
    ) -> Result<SwapDecision> {
        let dl = left
            .pref_strength
            .ok_or_else(|| Error::UnknownCandidate { id: left.id.clone() })?;
        let dr = right
            .pref_strength
            .ok_or_else(|| Error::UnknownCandidate { id: right.id.clone() })?;
        Ok(SwapDecision::from_bool(bradley_terry(dr, dl)? > 0.5))
    }
}

/// Replays a fixed swap/keep sequence and fails when exhausted. Used to
/// enumerate every outcome of a stochastic pass exhaustively.
#[derive(Debug, Clone)]
pub struct ScriptedComparator {
    decisions: Vec<bool>,
    cursor: usize,
}

impl ScriptedComparator {
    pub fn new(decisions: Vec<bool>) -> Self {
        ScriptedComparator {
            decisions,
            cursor: 0,
        }
    }

    /// Comparisons consumed so far.
    pub fn consumed(&self) -> usize {
        self.cursor
    }
}

impl PairwiseComparator for ScriptedComparator {
    fn compare(
        &mut self,
        _left: &crate::impression::CandidateRecord,
        _right: &crate::impression::CandidateRecord,
        _rng: &mut dyn RngCore,
    ) -> Result<SwapDecision> {
        let decision = self
            .decisions
            .get(self.cursor)
            .copied()
            .ok_or_else(|| Error::contract("scripted comparator ran out of decisions"))?;
        self.cursor += 1;
        Ok(SwapDecision::from_bool(decision))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bradley_terry_symmetric_strengths() {
        assert_abs_diff_eq!(bradley_terry(0.7, 0.7).unwrap(), 0.5);
    }

    #[test]
    fn bradley_terry_known_values() {
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(bradley_terry(1.0, 0.0).unwrap(), e / (e + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(
            bradley_terry(1.0, 0.0).unwrap(),
            0.731_058_578_630_004_9,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            bradley_terry(0.3, 0.9).unwrap(),
            1.0 / (1.0 + 0.6f64.exp()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            bradley_terry(0.3, 0.9).unwrap(),
            0.354_343_693_774_204_5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            bradley_terry(0.3, 0.9).unwrap() + bradley_terry(0.9, 0.3).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn bradley_terry_rejects_non_finite() {
        assert!(bradley_terry(f64::NAN, 0.0).is_err());
        assert!(bradley_terry(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn bradley_terry_stable_for_large_strengths() {
        let p = bradley_terry(800.0, -800.0).unwrap();
        assert!(p > 1.0 - 1e-12 && p <= 1.0);
        let q = bradley_terry(-800.0, 800.0).unwrap();
        assert!(q >= 0.0 && q < 1e-12);
    }

    #[test]
    fn oracle_zero_mu_never_swaps_bad_pairs() {
        let params = OracleParams::new(0.0, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            assert_eq!(
                oracle_compare(true, false, &params, &mut rng),
                SwapDecision::Keep
            );
        }
    }

    #[test]
    fn oracle_unit_nu_always_swaps_good_pairs() {
        let params = OracleParams::new(0.3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            assert_eq!(
                oracle_compare(false, true, &params, &mut rng),
                SwapDecision::Swap
            );
        }
    }

    #[test]
    fn oracle_swap_rate_matches_nu() {
        // nu = 0.5 over 1e5 seeded draws; binomial sd = sqrt(p(1-p)/n).
        let params = OracleParams::new(0.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 100_000;
        let swaps = (0..n)
            .filter(|_| oracle_compare(false, true, &params, &mut rng).is_swap())
            .count();
        let rate = swaps as f64 / n as f64;
        let sd = (0.5 * 0.5 / n as f64).sqrt();
        assert!((rate - 0.5).abs() < 3.0 * sd, "rate {rate}");
    }

    #[test]
    fn oracle_is_bit_reproducible() {
        let params = OracleParams::new(0.4, 0.6).unwrap();
        let draw = |seed: u64| -> Vec<bool> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..256)
                .map(|i| {
                    let (l, r) = match i % 3 {
                        0 => (true, false),
                        1 => (false, true),
                        _ => (false, false),
                    };
                    oracle_compare(l, r, &params, &mut rng).is_swap()
                })
                .collect()
        };
        assert_eq!(draw(99), draw(99));
        assert_ne!(draw(99), draw(100));
    }

    #[test]
    fn oracle_params_validate_ranges() {
        assert!(OracleParams::new(-0.1, 0.5).is_err());
        assert!(OracleParams::new(0.5, 1.1).is_err());
        assert!(OracleParams::with_tie_swap(0.5, 0.5, 2.0).is_err());
    }

    #[test]
    fn table_compare_follows_strengths() {
        let table =
            PreferenceTable::from_strengths([("l", 2.0), ("r", 1.0), ("eq", 2.0)]).unwrap();
        assert_eq!(table_compare("l", "r", &table).unwrap(), SwapDecision::Keep);
        assert_eq!(table_compare("r", "l", &table).unwrap(), SwapDecision::Swap);
        // Exact tie keeps the current order.
        assert_eq!(table_compare("l", "eq", &table).unwrap(), SwapDecision::Keep);
    }

    #[test]
    fn table_compare_reports_missing_id() {
        let table = PreferenceTable::from_strengths([("a", 1.0)]).unwrap();
        match table_compare("a", "ghost", &table) {
            Err(Error::UnknownCandidate { id }) => assert_eq!(id, "ghost"),
            other => panic!("expected UnknownCandidate, got {other:?}"),
        }
    }

    #[test]
    fn pairwise_map_requires_complement_identity() {
        let ok = PreferenceTable::from_pairwise([
            (("a", "b"), 0.7),
            (("b", "a"), 0.3),
        ]);
        assert!(ok.is_ok());
        assert_abs_diff_eq!(ok.unwrap().prefer_prob("a", "b").unwrap(), 0.7);

        let bad = PreferenceTable::from_pairwise([
            (("a", "b"), 0.7),
            (("b", "a"), 0.4),
        ]);
        assert!(bad.is_err());

        let missing = PreferenceTable::from_pairwise([(("a", "b"), 0.7)]);
        assert!(missing.is_err());
    }

    proptest! {
        #[test]
        fn bradley_terry_complement_sums_to_one(
            a in -700.0f64..700.0,
            b in -700.0f64..700.0,
        ) {
            let p = bradley_terry(a, b).unwrap();
            let q = bradley_terry(b, a).unwrap();
            prop_assert!((p + q - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&p));
        }

        // Strictness saturates once |δi - δj| pushes the logistic within one
        // ulp of 0 or 1, so the strengths stay in a resolvable band.
        #[test]
        fn bradley_terry_monotone_in_strengths(
            a in -8.0f64..8.0,
            b in -8.0f64..8.0,
            bump in 0.001f64..5.0,
        ) {
            let p = bradley_terry(a, b).unwrap();
            prop_assert!(bradley_terry(a + bump, b).unwrap() > p);
            prop_assert!(bradley_terry(a, b + bump).unwrap() < p);
        }
    }
}
