//! Inference strategies: pointwise score sorting, right-to-left (RTL) pairwise
//! refinement passes, full bubble sort, all-pairs box filling, and windowed
//! reranking. Every strategy returns a [`Ranking`] carrying an exact
//! comparison count, asserted against the closed-form budget.
//!
//! Within a pass, swaps apply immediately: an item that just moved left takes
//! part in the next comparison, which is what lets a strong comparator carry a
//! relevant item across the whole prefix in a single pass.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::comparators::PairwiseComparator;
use crate::error::{Error, Result};
use crate::impression::{Impression, Ranking, RankingSource};
use crate::seeding::shuffle_in_place;

/// Initialization for the full bubble sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BubbleInit {
    Pointwise,
    Random,
}

/// Window gathering scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Consecutive windows overlapping by one position.
    Neighborhood,
    /// Windows gather every s-th position.
    Skip,
}

/// A fully parameterized inference strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    Pointwise,
    Rtl {
        passes: u32,
        top_k: usize,
    },
    #[serde(rename = "bubble")]
    BubbleFull {
        init: BubbleInit,
    },
    #[serde(rename = "box")]
    BoxFilling,
    NWindow {
        window: usize,
    },
    SWindow {
        window: usize,
        skip: usize,
    },
}

impl StrategySpec {
    /// Checks the parameters against a list of `k` candidates.
    pub fn validate(&self, k: usize) -> Result<()> {
        if k < 2 {
            return Err(Error::contract(format!("need at least 2 candidates, got {k}")));
        }
        match *self {
            StrategySpec::Pointwise | StrategySpec::BubbleFull { .. } | StrategySpec::BoxFilling => {
                Ok(())
            }
            StrategySpec::Rtl { passes, top_k } => {
                if passes < 1 {
                    return Err(Error::contract("rtl: passes must be >= 1"));
                }
                if top_k < 2 || top_k > k {
                    return Err(Error::contract(format!(
                        "rtl: top_k must lie in [2, {k}], got {top_k}"
                    )));
                }
                Ok(())
            }
            StrategySpec::NWindow { window } => {
                if window < 2 || window > k {
                    return Err(Error::contract(format!(
                        "n_window: window must lie in [2, {k}], got {window}"
                    )));
                }
                Ok(())
            }
            StrategySpec::SWindow { window, skip } => {
                if window < 2 || window > k {
                    return Err(Error::contract(format!(
                        "s_window: window must lie in [2, {k}], got {window}"
                    )));
                }
                if skip < 1 {
                    return Err(Error::contract("s_window: skip must be >= 1"));
                }
                Ok(())
            }
        }
    }

    /// Closed-form comparator-call budget for a list of `k` candidates.
    pub fn expected_comparisons(&self, k: usize) -> u64 {
        match *self {
            StrategySpec::Pointwise => 0,
            StrategySpec::Rtl { passes, top_k } => passes as u64 * (top_k as u64 - 1),
            StrategySpec::BubbleFull { .. } | StrategySpec::BoxFilling => {
                (k as u64 * (k as u64 - 1)) / 2
            }
            StrategySpec::NWindow { window } => {
                let per = (window as u64 * (window as u64 - 1)) / 2;
                neighborhood_layout(k, window).len() as u64 * per
            }
            StrategySpec::SWindow { window, skip } => {
                let per = (window as u64 * (window as u64 - 1)) / 2;
                skip_layout(k, window, skip).len() as u64 * per
            }
        }
    }

    /// Provenance tag for rankings this strategy produces.
    pub fn source(&self) -> RankingSource {
        match *self {
            StrategySpec::Pointwise => RankingSource::Pointwise,
            StrategySpec::Rtl { passes, top_k } => RankingSource::Rtl { passes, top_k },
            StrategySpec::BubbleFull {
                init: BubbleInit::Pointwise,
            } => RankingSource::BubblePointInit,
            StrategySpec::BubbleFull {
                init: BubbleInit::Random,
            } => RankingSource::BubbleRandomInit,
            StrategySpec::BoxFilling => RankingSource::BoxFilling,
            StrategySpec::NWindow { window } => RankingSource::NWindow { window },
            StrategySpec::SWindow { window, skip } => RankingSource::SWindow { window, skip },
        }
    }

    /// True when the strategy needs every candidate scored.
    pub fn requires_scores(&self) -> bool {
        !matches!(
            self,
            StrategySpec::BubbleFull {
                init: BubbleInit::Random,
            } | StrategySpec::BoxFilling
        )
    }
}

impl std::fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.source())
    }
}

/// Descending stable sort by pointwise score; ties keep the original candidate
/// order. Costs zero pairwise-comparator calls.
pub fn pointwise_sort(impression: &Impression) -> Result<Ranking> {
    let candidates = impression.candidates();
    let mut scores = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        match candidate.score {
            Some(score) => scores.push(score),
            None => {
                return Err(Error::MissingScore {
                    id: candidate.id.clone(),
                })
            }
        }
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ranking::new(order, RankingSource::Pointwise, 0)
}

/// Right-to-left sweep over the 0-based adjacent pairs (hi, hi+1) down to
/// (lo, lo+1), applying each swap before the next comparison.
fn rtl_sweep(
    order: &mut [usize],
    impression: &Impression,
    comparator: &mut dyn PairwiseComparator,
    lo: usize,
    hi: usize,
    rng: &mut dyn RngCore,
) -> Result<u64> {
    let candidates = impression.candidates();
    let mut comparisons = 0u64;
    for p in (lo..=hi).rev() {
        comparisons += 1;
        let decision = comparator.compare(&candidates[order[p]], &candidates[order[p + 1]], rng)?;
        if decision.is_swap() {
            order.swap(p, p + 1);
        }
    }
    Ok(comparisons)
}

/// One right-to-left pass over the `top_k` prefix: compares adjacent positions
/// (top_k-1, top_k), ..., (1, 2) in that order, applying each swap before the
/// next comparison. Exactly top_k - 1 comparator calls; positions beyond
/// `top_k` are untouched (the boundary pair (top_k, top_k+1) is not compared).
pub fn rtl_pass(
    ranking: &Ranking,
    impression: &Impression,
    comparator: &mut dyn PairwiseComparator,
    top_k: usize,
    rng: &mut dyn RngCore,
) -> Result<Ranking> {
    if ranking.len() != impression.len() {
        return Err(Error::LengthMismatch {
            context: "rtl_pass",
            left: ranking.len(),
            right: impression.len(),
        });
    }
    if top_k < 2 || top_k > ranking.len() {
        return Err(Error::contract(format!(
            "rtl_pass: top_k must lie in [2, {}], got {top_k}",
            ranking.len()
        )));
    }
    let mut order = ranking.order().to_vec();
    let comparisons = rtl_sweep(&mut order, impression, comparator, 0, top_k - 2, rng)?;
    Ranking::new(order, ranking.source, ranking.comparisons_used + comparisons)
}

/// Pointwise initialization followed by `passes` RTL passes over the top-k
/// prefix. Total cost: passes * (top_k - 1) comparisons.
pub fn rtl_aggregate(
    impression: &Impression,
    comparator: &mut dyn PairwiseComparator,
    passes: u32,
    top_k: usize,
    rng: &mut dyn RngCore,
) -> Result<Ranking> {
    let spec = StrategySpec::Rtl { passes, top_k };
    spec.validate(impression.len())?;
    let mut ranking = pointwise_sort(impression)?;
    for _ in 0..passes {
        ranking = rtl_pass(&ranking, impression, comparator, top_k, rng)?;
    }
    ranking.source = spec.source();
    Ok(ranking)
}

/// Full bubble sort from a given starting order: K-1 successive RTL passes,
/// each one position shorter on the left. An RTL pass carries a locally
/// preferred item to the front, so rank 1 is settled after the first pass and
/// pass p sweeps positions p..K; anything else (e.g. shrinking on the right)
/// fails to sort even under a perfect comparator, because RTL passes never
/// push items rightward to settle the tail. K(K-1)/2 comparisons in total;
/// with a stochastic comparator the result is a sample, not a guaranteed
/// sort.
pub fn bubble_sort_from(
    start: &Ranking,
    impression: &Impression,
    comparator: &mut dyn PairwiseComparator,
    rng: &mut dyn RngCore,
) -> Result<Ranking> {
    let k = impression.len();
    if start.len() != k {
        return Err(Error::LengthMismatch {
            context: "bubble_sort_from",
            left: start.len(),
            right: k,
        });
    }
    let mut order = start.order().to_vec();
    let mut comparisons = start.comparisons_used;
    for pass in 0..k - 1 {
        comparisons += rtl_sweep(&mut order, impression, comparator, pass, k - 2, rng)?;
    }
    Ranking::new(order, start.source, comparisons)
}

/// Full bubble sort with pointwise or random initialization.
pub fn bubble_sort_full(
    impression: &Impression,
    comparator: &mut dyn PairwiseComparator,
    init: BubbleInit,
    rng: &mut dyn RngCore,
) -> Result<Ranking> {
    let start = match init {
        BubbleInit::Pointwise => pointwise_sort(impression)?,
        BubbleInit::Random => {
            let mut order: Vec<usize> = (0..impression.len()).collect();
            shuffle_in_place(&mut order, rng);
            Ranking::new(order, RankingSource::Random, 0)?
        }
    };
    let mut ranking = bubble_sort_from(&start, impression, comparator, rng)?;
    ranking.source = StrategySpec::BubbleFull { init }.source();
    Ok(ranking)
}

/// Compares all position pairs of `positions` (window or whole list), counts
/// wins, and writes the occupants back ordered by descending wins; ties break
/// by pointwise score, then by original candidate order. Returns the number of
/// comparisons spent.
fn rerank_by_wins(
    order: &mut [usize],
    positions: &[usize],
    impression: &Impression,
    comparator: &mut dyn PairwiseComparator,
    rng: &mut dyn RngCore,
) -> Result<u64> {
    let candidates = impression.candidates();
    let w = positions.len();
    let mut wins = vec![0u32; w];
    let mut comparisons = 0u64;
    for a in 0..w {
        for b in a + 1..w {
            comparisons += 1;
            let left = &candidates[order[positions[a]]];
            let right = &candidates[order[positions[b]]];
            if comparator.compare(left, right, rng)?.is_swap() {
                wins[b] += 1;
            } else {
                wins[a] += 1;
            }
        }
    }
    let score_of = |candidate: usize| candidates[candidate].score.unwrap_or(f64::NEG_INFINITY);
    let mut slots: Vec<usize> = (0..w).collect();
    slots.sort_by(|&x, &y| {
        wins[y]
            .cmp(&wins[x])
            .then_with(|| {
                score_of(order[positions[y]]).total_cmp(&score_of(order[positions[x]]))
            })
            .then_with(|| order[positions[x]].cmp(&order[positions[y]]))
    });
    let occupants: Vec<usize> = slots.iter().map(|&slot| order[positions[slot]]).collect();
    for (slot, &position) in positions.iter().enumerate() {
        order[position] = occupants[slot];
    }
    Ok(comparisons)
}

/// All-pairs comparison table: every unordered candidate pair is compared
/// once, candidates are ranked by their win marginals (ties by pointwise
/// score, then original order). K(K-1)/2 comparisons. Duels run over the
/// pointwise order when scores are present, the stored order otherwise.
pub fn box_filling(
    impression: &Impression,
    comparator: &mut dyn PairwiseComparator,
    rng: &mut dyn RngCore,
) -> Result<Ranking> {
    let k = impression.len();
    let all_scored = impression.candidates().iter().all(|c| c.score.is_some());
    let mut order = if all_scored {
        pointwise_sort(impression)?.into_order()
    } else {
        (0..k).collect()
    };
    let positions: Vec<usize> = (0..k).collect();
    let comparisons = rerank_by_wins(&mut order, &positions, impression, comparator, rng)?;
    Ranking::new(order, RankingSource::BoxFilling, comparisons)
}

/// Consecutive overlap-1 window start positions: 1, w, 2w-1, ... (1-based). A
/// trailing fragment shorter than w is left untouched.
fn neighborhood_layout(k: usize, window: usize) -> Vec<Vec<usize>> {
    let mut windows = Vec::new();
    let mut start = 0;
    while start + window <= k {
        windows.push((start..start + window).collect());
        start += window - 1;
    }
    windows
}

/// Strided windows: for each offset, gather every s-th position, then chunk
/// the gathered sequence into groups of exactly `window`; partial chunks are
/// left untouched.
fn skip_layout(k: usize, window: usize, skip: usize) -> Vec<Vec<usize>> {
    let mut windows = Vec::new();
    for offset in 0..skip {
        let gathered: Vec<usize> = (offset..k).step_by(skip).collect();
        for chunk in gathered.chunks(window) {
            if chunk.len() == window {
                windows.push(chunk.to_vec());
            }
        }
    }
    windows
}

/// Windowed reranking over an existing ranking: each window is reordered by
/// within-window all-pairs win counts, windows processed left to right with
/// immediate write-back. Costs (#windows) * w(w-1)/2 comparisons.
pub fn window_rerank(
    ranking: &Ranking,
    impression: &Impression,
    comparator: &mut dyn PairwiseComparator,
    kind: WindowKind,
    window: usize,
    skip: usize,
    rng: &mut dyn RngCore,
) -> Result<Ranking> {
    let k = impression.len();
    if ranking.len() != k {
        return Err(Error::LengthMismatch {
            context: "window_rerank",
            left: ranking.len(),
            right: k,
        });
    }
    let (spec, layout) = match kind {
        WindowKind::Neighborhood => (
            StrategySpec::NWindow { window },
            neighborhood_layout(k, window),
        ),
        WindowKind::Skip => (
            StrategySpec::SWindow { window, skip },
            skip_layout(k, window, skip),
        ),
    };
    spec.validate(k)?;
    let mut order = ranking.order().to_vec();
    let mut comparisons = 0u64;
    for positions in &layout {
        comparisons += rerank_by_wins(&mut order, positions, impression, comparator, rng)?;
    }
    Ranking::new(order, spec.source(), ranking.comparisons_used + comparisons)
}

/// Runs a fully specified strategy on an impression and asserts the exact
/// comparison budget.
pub fn apply_strategy(
    impression: &Impression,
    spec: &StrategySpec,
    comparator: &mut dyn PairwiseComparator,
    rng: &mut dyn RngCore,
) -> Result<Ranking> {
    spec.validate(impression.len())?;
    let ranking = match *spec {
        StrategySpec::Pointwise => pointwise_sort(impression)?,
        StrategySpec::Rtl { passes, top_k } => {
            rtl_aggregate(impression, comparator, passes, top_k, rng)?
        }
        StrategySpec::BubbleFull { init } => bubble_sort_full(impression, comparator, init, rng)?,
        StrategySpec::BoxFilling => box_filling(impression, comparator, rng)?,
        StrategySpec::NWindow { window } => {
            let base = pointwise_sort(impression)?;
            window_rerank(
                &base,
                impression,
                comparator,
                WindowKind::Neighborhood,
                window,
                1,
                rng,
            )?
        }
        StrategySpec::SWindow { window, skip } => {
            let base = pointwise_sort(impression)?;
            window_rerank(
                &base,
                impression,
                comparator,
                WindowKind::Skip,
                window,
                skip,
                rng,
            )?
        }
    };
    let expected = spec.expected_comparisons(impression.len());
    assert_eq!(
        ranking.comparisons_used, expected,
        "strategy {spec} spent {} comparisons, budget is {expected}",
        ranking.comparisons_used
    );
    Ok(ranking)
}
