//! Domain types shared by every module: impressions, rankings, and
//! position-aligned relevance vectors.
//!
//! Rank 1 is the leftmost/top/best position throughout; "right" always means
//! the high-rank-index end of the list.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One candidate within an impression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: String,
    /// Binary relevance (click / no click). Graded relevance is rejected at
    /// parse time.
    pub label: bool,
    /// Pointwise model score, when available.
    pub score: Option<f64>,
    /// Per-item pairwise logit strength, when available.
    pub pref_strength: Option<f64>,
}

impl CandidateRecord {
    pub fn new(id: impl Into<String>, label: bool) -> Self {
        CandidateRecord {
            id: id.into(),
            label,
            score: None,
            pref_strength: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn with_pref_strength(mut self, strength: f64) -> Self {
        self.pref_strength = Some(strength);
        self
    }
}

/// A structural problem found while validating an impression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImpressionViolation {
    TooFewCandidates { count: usize },
    DuplicateId { id: String },
    NoPositiveLabel,
    NoNegativeLabel,
    /// Reported only when score-based validation is requested.
    MissingScores { count: usize },
}

impl fmt::Display for ImpressionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImpressionViolation::TooFewCandidates { count } => {
                write!(f, "fewer than 2 candidates ({count})")
            }
            ImpressionViolation::DuplicateId { id } => write!(f, "duplicate candidate id `{id}`"),
            ImpressionViolation::NoPositiveLabel => write!(f, "no positive label"),
            ImpressionViolation::NoNegativeLabel => write!(f, "no negative label"),
            ImpressionViolation::MissingScores { count } => {
                write!(f, "{count} candidate(s) missing a score")
            }
        }
    }
}

/// Checks the impression invariants on a raw candidate list, returning every
/// violation found. With `require_scores` set, missing pointwise scores are
/// also reported (needed when a score-based strategy is requested).
pub fn validate_candidates(
    candidates: &[CandidateRecord],
    require_scores: bool,
) -> Vec<ImpressionViolation> {
    let mut violations = Vec::new();
    if candidates.len() < 2 {
        violations.push(ImpressionViolation::TooFewCandidates {
            count: candidates.len(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for candidate in candidates {
        if !seen.insert(candidate.id.as_str()) {
            violations.push(ImpressionViolation::DuplicateId {
                id: candidate.id.clone(),
            });
        }
    }
    if !candidates.iter().any(|c| c.label) {
        violations.push(ImpressionViolation::NoPositiveLabel);
    }
    if !candidates.iter().any(|c| !c.label) {
        violations.push(ImpressionViolation::NoNegativeLabel);
    }
    if require_scores {
        let missing = candidates.iter().filter(|c| c.score.is_none()).count();
        if missing > 0 {
            violations.push(ImpressionViolation::MissingScores { count: missing });
        }
    }
    violations
}

/// One ranking episode: a candidate set with binary labels and optional
/// pointwise/pairwise model outputs.
///
/// Construction enforces the structural invariants (at least two candidates,
/// unique ids, at least one positive and one negative label); every ranking
/// metric is degenerate without them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Impression {
    id: String,
    candidates: Vec<CandidateRecord>,
}

impl Impression {
    pub fn new(id: impl Into<String>, candidates: Vec<CandidateRecord>) -> Result<Self> {
        let id = id.into();
        let violations = validate_candidates(&candidates, false);
        if !violations.is_empty() {
            let problems = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::InvalidImpression { id, problems });
        }
        Ok(Impression { id, candidates })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn candidates(&self) -> &[CandidateRecord] {
        &self.candidates
    }

    /// Number of candidates K.
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.candidates.iter().map(|c| c.label).collect()
    }

    pub fn positive_count(&self) -> usize {
        self.candidates.iter().filter(|c| c.label).count()
    }

    /// Re-runs the invariant checks, optionally requiring scores.
    pub fn diagnostics(&self, require_scores: bool) -> Vec<ImpressionViolation> {
        validate_candidates(&self.candidates, require_scores)
    }
}

/// Tag describing which strategy produced a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankingSource {
    /// Hand-built or externally supplied order.
    Initial,
    /// Uniform random shuffle.
    Random,
    Pointwise,
    Rtl { passes: u32, top_k: usize },
    BubblePointInit,
    BubbleRandomInit,
    BoxFilling,
    NWindow { window: usize },
    SWindow { window: usize, skip: usize },
}

impl fmt::Display for RankingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankingSource::Initial => write!(f, "initial"),
            RankingSource::Random => write!(f, "random"),
            RankingSource::Pointwise => write!(f, "pointwise"),
            RankingSource::Rtl { passes, top_k } => write!(f, "rtl(m={passes},top_k={top_k})"),
            RankingSource::BubblePointInit => write!(f, "bubble(point_init)"),
            RankingSource::BubbleRandomInit => write!(f, "bubble(random_init)"),
            RankingSource::BoxFilling => write!(f, "box_filling"),
            RankingSource::NWindow { window } => write!(f, "n_window(w={window})"),
            RankingSource::SWindow { window, skip } => {
                write!(f, "s_window(w={window},s={skip})")
            }
        }
    }
}

/// An ordered permutation of candidate positions plus provenance.
///
/// `order[p]` is the candidate index placed at rank `p + 1`; index 0 is the
/// top of the list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    order: Vec<usize>,
    pub source: RankingSource,
    /// Number of pairwise-comparator calls spent producing this ranking.
    pub comparisons_used: u64,
}

impl Ranking {
    /// Builds a ranking, rejecting any `order` that is not a permutation of
    /// `0..order.len()`.
    pub fn new(order: Vec<usize>, source: RankingSource, comparisons_used: u64) -> Result<Self> {
        if !is_permutation(&order) {
            return Err(Error::NotAPermutation { context: "Ranking" });
        }
        Ok(Ranking {
            order,
            source,
            comparisons_used,
        })
    }

    /// The identity order over `k` candidates.
    pub fn identity(k: usize, source: RankingSource) -> Self {
        Ranking {
            order: (0..k).collect(),
            source,
            comparisons_used: 0,
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 1-based rank of a candidate index, if present.
    pub fn rank_of(&self, candidate: usize) -> Option<usize> {
        self.order.iter().position(|&c| c == candidate).map(|p| p + 1)
    }

    pub(crate) fn into_order(self) -> Vec<usize> {
        self.order
    }
}

pub(crate) fn is_permutation(order: &[usize]) -> bool {
    let mut seen = vec![false; order.len()];
    for &idx in order {
        if idx >= order.len() || seen[idx] {
            return false;
        }
        seen[idx] = true;
    }
    true
}

/// Binary relevance pattern aligned with a ranking; entry 0 belongs to rank 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceVector {
    z: Vec<bool>,
}

impl RelevanceVector {
    pub fn new(z: Vec<bool>) -> Self {
        RelevanceVector { z }
    }

    /// The state with a single relevant item at 1-based `rank`.
    pub fn single_state(k: usize, rank: usize) -> Self {
        assert!(rank >= 1 && rank <= k, "rank out of range");
        RelevanceVector {
            z: (1..=k).map(|r| r == rank).collect(),
        }
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn relevant_count(&self) -> usize {
        self.z.iter().filter(|&&b| b).count()
    }

    /// 1-based rank of the relevant item when exactly one entry is set.
    pub fn single_relevant_rank(&self) -> Option<usize> {
        if self.relevant_count() != 1 {
            return None;
        }
        self.z.iter().position(|&b| b).map(|p| p + 1)
    }

    /// 1-based rank of the first relevant item.
    pub fn first_relevant_rank(&self) -> Option<usize> {
        self.z.iter().position(|&b| b).map(|p| p + 1)
    }

    /// Number of (irrelevant, relevant) pairs ranked in that order, i.e. pairs
    /// an ideal ranking would have the other way around.
    pub fn inversions(&self) -> u64 {
        let mut zeros_seen = 0u64;
        let mut inversions = 0u64;
        for &bit in &self.z {
            if bit {
                inversions += zeros_seen;
            } else {
                zeros_seen += 1;
            }
        }
        inversions
    }
}

/// Aligns an impression's labels with a ranking: entry `p` is the label of the
/// candidate placed at rank `p + 1`.
pub fn relevance_of(ranking: &Ranking, impression: &Impression) -> Result<RelevanceVector> {
    if ranking.len() != impression.len() {
        return Err(Error::LengthMismatch {
            context: "relevance_of",
            left: ranking.len(),
            right: impression.len(),
        });
    }
    let candidates = impression.candidates();
    Ok(RelevanceVector::new(
        ranking.order().iter().map(|&idx| candidates[idx].label).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn impression_with_labels(labels: &[bool]) -> Impression {
        let candidates = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| CandidateRecord::new(format!("c{i}"), label))
            .collect();
        Impression::new("imp", candidates).unwrap()
    }

    fn ranking(order: &[usize]) -> Ranking {
        Ranking::new(order.to_vec(), RankingSource::Initial, 0).unwrap()
    }

    #[test]
    fn relevance_of_identity() {
        let imp = impression_with_labels(&[false, true, false]);
        let z = relevance_of(&ranking(&[0, 1, 2]), &imp).unwrap();
        assert_eq!(z.as_slice(), &[false, true, false]);
    }

    #[test]
    fn relevance_of_permutes() {
        let imp = impression_with_labels(&[false, true, false]);
        // Rank 1 holds candidate 2 (1-based), i.e. index 1.
        let z = relevance_of(&ranking(&[1, 0, 2]), &imp).unwrap();
        assert_eq!(z.as_slice(), &[true, false, false]);
    }

    #[test]
    fn relevance_of_reversal() {
        let imp = impression_with_labels(&[true, false, true, false]);
        let z = relevance_of(&ranking(&[3, 2, 1, 0]), &imp).unwrap();
        assert_eq!(z.as_slice(), &[false, true, false, true]);
    }

    #[test]
    fn relevance_of_rejects_length_mismatch() {
        let imp = impression_with_labels(&[true, false, true]);
        let short = ranking(&[1, 0]);
        assert!(matches!(
            relevance_of(&short, &imp),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn validation_passes_on_well_formed() {
        let candidates = vec![
            CandidateRecord::new("a", true).with_score(0.9),
            CandidateRecord::new("b", false).with_score(0.1),
        ];
        assert!(validate_candidates(&candidates, true).is_empty());
    }

    #[test]
    fn validation_flags_all_negative() {
        let candidates = vec![
            CandidateRecord::new("a", false),
            CandidateRecord::new("b", false),
        ];
        let violations = validate_candidates(&candidates, false);
        assert!(violations.contains(&ImpressionViolation::NoPositiveLabel));
    }

    #[test]
    fn validation_flags_duplicate_id() {
        let candidates = vec![
            CandidateRecord::new("a", true),
            CandidateRecord::new("a", false),
        ];
        let violations = validate_candidates(&candidates, false);
        assert!(violations
            .iter()
            .any(|v| matches!(v, ImpressionViolation::DuplicateId { id } if id == "a")));
    }

    #[test]
    fn validation_flags_missing_scores_only_on_request() {
        let candidates = vec![
            CandidateRecord::new("a", true).with_score(0.4),
            CandidateRecord::new("b", false),
        ];
        assert!(validate_candidates(&candidates, false).is_empty());
        assert_eq!(
            validate_candidates(&candidates, true),
            vec![ImpressionViolation::MissingScores { count: 1 }]
        );
    }

    #[test]
    fn ranking_rejects_non_permutations() {
        assert!(Ranking::new(vec![0, 0, 1], RankingSource::Initial, 0).is_err());
        assert!(Ranking::new(vec![0, 3, 1], RankingSource::Initial, 0).is_err());
    }

    #[test]
    fn inversions_counts_misordered_pairs() {
        assert_eq!(RelevanceVector::new(vec![true, false, true, false]).inversions(), 1);
        assert_eq!(RelevanceVector::new(vec![false, false, true]).inversions(), 2);
        assert_eq!(RelevanceVector::new(vec![true, true, false]).inversions(), 0);
    }

    #[test]
    fn single_state_places_relevant_item() {
        let z = RelevanceVector::single_state(4, 3);
        assert_eq!(z.as_slice(), &[false, false, true, false]);
        assert_eq!(z.single_relevant_rank(), Some(3));
    }

    proptest! {
        // Aligning labels through a ranking commutes with permuting the labels
        // directly.
        #[test]
        fn relevance_of_commutes_with_permutation(
            labels in proptest::collection::vec(any::<bool>(), 2..10),
            seed in any::<u64>(),
        ) {
            prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
            let k = labels.len();
            let imp = impression_with_labels(&labels);

            let mut order: Vec<usize> = (0..k).collect();
            // Deterministic Fisher-Yates from the seed.
            let mut state = seed;
            for i in (1..k).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                order.swap(i, j);
            }

            let via_ranking = relevance_of(&ranking(&order), &imp).unwrap();
            let direct: Vec<bool> = order.iter().map(|&idx| labels[idx]).collect();
            prop_assert_eq!(via_ranking.as_slice(), direct.as_slice());
        }

        #[test]
        fn permutation_check_accepts_shuffles(k in 2usize..20, seed in any::<u64>()) {
            let mut order: Vec<usize> = (0..k).collect();
            let mut state = seed;
            for i in (1..k).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                order.swap(i, j);
            }
            prop_assert!(Ranking::new(order, RankingSource::Initial, 0).is_ok());
        }
    }
}
