//! Ranking metrics: additive rank-discount metrics (MRR, DCG) evaluated on
//! relevance vectors, plus nDCG@k and AUC for scored or ranked impressions.
//!
//! The additive form is Δ(z) = Σ_v λ(v)·z_v with a positive, non-increasing
//! discount λ over ranks v ≥ 1. MRR uses λ(v) = 1/v, DCG uses
//! λ(v) = 1/log_b(1+v) with a configurable base b.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impression::{relevance_of, Impression, Ranking, RelevanceVector};

/// Logarithm base for DCG-style discounts. The analytical modules default to
/// the natural-log form; the evaluation path defaults to base 2 per IR
/// convention. Reports record the base on every row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[serde(rename = "e")]
    E,
    #[default]
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    pub fn value(self) -> f64 {
        match self {
            LogBase::E => std::f64::consts::E,
            LogBase::Two => 2.0,
        }
    }
}

impl std::fmt::Display for LogBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LogBase::E => write!(f, "e"),
            LogBase::Two => write!(f, "2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFamily {
    Mrr,
    Dcg,
    NdcgAtK,
    Auc,
}

/// A metric specification: family, rank discount, and optional cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub family: MetricFamily,
    pub log_base: LogBase,
    pub cutoff: Option<usize>,
}

impl MetricSpec {
    pub fn mrr() -> Self {
        MetricSpec {
            family: MetricFamily::Mrr,
            log_base: LogBase::E,
            cutoff: None,
        }
    }

    pub fn dcg(log_base: LogBase) -> Self {
        MetricSpec {
            family: MetricFamily::Dcg,
            log_base,
            cutoff: None,
        }
    }

    pub fn ndcg_at(k: usize, log_base: LogBase) -> Self {
        MetricSpec {
            family: MetricFamily::NdcgAtK,
            log_base,
            cutoff: Some(k),
        }
    }

    pub fn auc() -> Self {
        MetricSpec {
            family: MetricFamily::Auc,
            log_base: LogBase::Two,
            cutoff: None,
        }
    }

    /// The rank discount λ(v) for 1-based rank `v`. Only meaningful for the
    /// additive families (MRR and DCG-style).
    pub fn discount(&self, rank: usize) -> f64 {
        debug_assert!(rank >= 1);
        match self.family {
            MetricFamily::Mrr => 1.0 / rank as f64,
            MetricFamily::Dcg | MetricFamily::NdcgAtK => {
                let base = self.log_base.value();
                base.ln() / (1.0 + rank as f64).ln()
            }
            MetricFamily::Auc => f64::NAN,
        }
    }

    fn require_additive(&self, op: &str) -> Result<()> {
        match self.family {
            MetricFamily::Mrr | MetricFamily::Dcg => Ok(()),
            MetricFamily::NdcgAtK | MetricFamily::Auc => Err(Error::contract(format!(
                "{op} is defined for additive metrics (MRR, DCG); {:?} needs labels or scores",
                self.family
            ))),
        }
    }
}

/// Evaluates the additive metric Σ_v λ(v)·z_v on a relevance vector.
pub fn eval_additive(z: &RelevanceVector, spec: &MetricSpec) -> Result<f64> {
    spec.require_additive("eval_additive")?;
    if z.is_empty() {
        return Err(Error::contract("eval_additive: empty relevance vector"));
    }
    Ok(z.as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &bit)| bit)
        .map(|(p, _)| spec.discount(p + 1))
        .sum())
}

/// The metric value of every single-relevant state: element `i` (0-based) is
/// the metric of the state with the relevant item at rank `i + 1`.
pub fn metric_vector(spec: &MetricSpec, k: usize) -> Result<Vec<f64>> {
    spec.require_additive("metric_vector")?;
    if k < 2 {
        return Err(Error::contract(format!("metric_vector: K must be >= 2, got {k}")));
    }
    Ok((1..=k).map(|rank| spec.discount(rank)).collect())
}

/// nDCG@k of a ranking: DCG@k divided by the DCG@k of the ideal label
/// ordering. A cutoff larger than the list is truncated to the list length.
pub fn ndcg_at_k(
    ranking: &Ranking,
    impression: &Impression,
    k: usize,
    log_base: LogBase,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::contract("ndcg_at_k: cutoff must be >= 1"));
    }
    let z = relevance_of(ranking, impression)?;
    ndcg_at_k_of_relevance(&z, k, log_base)
}

/// nDCG@k straight from a relevance vector.
pub fn ndcg_at_k_of_relevance(z: &RelevanceVector, k: usize, log_base: LogBase) -> Result<f64> {
    if k == 0 {
        return Err(Error::contract("ndcg_at_k: cutoff must be >= 1"));
    }
    let positives = z.relevant_count();
    if positives == 0 {
        return Err(Error::contract("ndcg_at_k: no positive labels, ideal DCG is zero"));
    }
    let spec = MetricSpec::dcg(log_base);
    let k = k.min(z.len());
    let dcg: f64 = z.as_slice()[..k]
        .iter()
        .enumerate()
        .filter(|(_, &bit)| bit)
        .map(|(p, _)| spec.discount(p + 1))
        .sum();
    let ideal: f64 = (1..=positives.min(k)).map(|rank| spec.discount(rank)).sum();
    Ok(dcg / ideal)
}

/// AUC of a permutation: the fraction of (positive, negative) pairs where the
/// positive is ranked above the negative. Permutations carry no scores, so
/// there are no ties.
pub fn auc_from_ranking(ranking: &Ranking, impression: &Impression) -> Result<f64> {
    let z = relevance_of(ranking, impression)?;
    auc_from_relevance(&z)
}

/// AUC straight from a relevance vector in rank order.
pub fn auc_from_relevance(z: &RelevanceVector) -> Result<f64> {
    let positives = z.relevant_count();
    let negatives = z.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::contract(
            "auc: needs at least one positive and one negative label",
        ));
    }
    // Walking down the ranking: each positive beats every negative that
    // appears after it.
    let mut concordant = 0u64;
    let mut positives_above = 0u64;
    for &bit in z.as_slice() {
        if bit {
            positives_above += 1;
        } else {
            concordant += positives_above;
        }
    }
    Ok(concordant as f64 / (positives as f64 * negatives as f64))
}

/// AUC of the pointwise scores with mid-rank tie handling (tied pairs count
/// one half).
pub fn auc_from_scores(impression: &Impression) -> Result<f64> {
    let candidates = impression.candidates();
    let mut scored = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        match candidate.score {
            Some(score) => scored.push((score, candidate.label)),
            None => {
                return Err(Error::MissingScore {
                    id: candidate.id.clone(),
                })
            }
        }
    }
    let positives = scored.iter().filter(|(_, label)| *label).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::contract(
            "auc: needs at least one positive and one negative label",
        ));
    }

    // Mann-Whitney with average ranks over tie groups; ranks ascend with score.
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scored[order[end + 1]].0 == scored[order[start]].0 {
            end += 1;
        }
        // Positions start..=end are tied; share the average 1-based rank.
        let avg_rank = (start + end) as f64 / 2.0 + 1.0;
        for &idx in &order[start..=end] {
            if scored[idx].1 {
                rank_sum_pos += avg_rank;
            }
        }
        start = end + 1;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// 1/(rank of the first relevant item): the IR-convention MRR of one ranking.
/// Coincides with the additive MRR whenever only one item is relevant.
pub fn reciprocal_rank(z: &RelevanceVector) -> Result<f64> {
    match z.first_relevant_rank() {
        Some(rank) => Ok(1.0 / rank as f64),
        None => Err(Error::contract("reciprocal_rank: no relevant item")),
    }
}
