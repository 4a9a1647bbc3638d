//! Seeded Monte Carlo validation harness.
//!
//! Every routine derives per-trial (or per-state) generators from the master
//! seed through a stable hash, and aggregates in trial order, so results are
//! byte-identical no matter how many worker threads run the trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparators::{OracleComparator, OracleParams};
use crate::error::{Error, Result};
use crate::impression::{relevance_of, CandidateRecord, Impression, Ranking, RankingSource};
use crate::metrics::{ndcg_at_k_of_relevance, reciprocal_rank, LogBase};
use crate::metrics::auc_from_relevance;
use crate::priors::{sample_pointwise_scores, BetaScorePrior};
use crate::seeding::{derive_rng, derive_rng_keyed, shuffle_in_place, uniform_index};
use crate::strategies::{apply_strategy, pointwise_sort, rtl_pass, StrategySpec};

/// End-state tallies of repeated single RTL passes from every start state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTransition {
    k: usize,
    trials_per_state: u64,
    counts: Vec<u64>,
}

impl EmpiricalTransition {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn trials_per_state(&self) -> u64 {
        self.trials_per_state
    }

    pub fn count(&self, start: usize, end: usize) -> u64 {
        self.counts[start * self.k + end]
    }

    /// Empirical transition frequency from state `start` to `end` (0-based).
    pub fn frequency(&self, start: usize, end: usize) -> f64 {
        self.count(start, end) as f64 / self.trials_per_state as f64
    }

    /// Binomial standard error of the frequency estimate, computed at the
    /// estimate itself.
    pub fn std_error(&self, start: usize, end: usize) -> f64 {
        let p = self.frequency(start, end);
        (p * (1.0 - p) / self.trials_per_state as f64).sqrt()
    }
}

/// Impression whose labels put the single relevant item at 1-based `rank`;
/// the candidate order is the identity.
fn state_impression(k: usize, rank: usize) -> Result<Impression> {
    Impression::new(
        format!("state-{rank}"),
        (1..=k)
            .map(|r| CandidateRecord::new(format!("c{r}"), r == rank))
            .collect(),
    )
}

/// Runs `trials_per_state` single full-list RTL passes with the (μ, ν) oracle
/// from every start state and tabulates the end states.
pub fn empirical_transition_matrix(
    k: usize,
    params: &OracleParams,
    trials_per_state: u64,
    master_seed: u64,
) -> Result<EmpiricalTransition> {
    if k < 2 {
        return Err(Error::contract(format!("empirical transition needs K >= 2, got {k}")));
    }
    if trials_per_state == 0 {
        return Err(Error::contract("empirical transition needs at least 1 trial"));
    }
    let rows: Vec<Vec<u64>> = (0..k)
        .into_par_iter()
        .map(|start| -> Result<Vec<u64>> {
            let impression = state_impression(k, start + 1)?;
            let key = format!(
                "{k}:{}:{}:{}:{start}",
                params.mu.to_bits(),
                params.nu.to_bits(),
                params.tie_swap.to_bits()
            );
            let mut rng = derive_rng_keyed(master_seed, "transition", &key);
            let mut oracle = OracleComparator::new(*params);
            let identity = Ranking::identity(k, RankingSource::Initial);
            let mut row = vec![0u64; k];
            for _ in 0..trials_per_state {
                let after = rtl_pass(&identity, &impression, &mut oracle, k, &mut rng)?;
                let z = relevance_of(&after, &impression)?;
                let end = z
                    .single_relevant_rank()
                    .expect("single-relevant state stays single-relevant");
                row[end - 1] += 1;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalTransition {
        k,
        trials_per_state,
        counts: rows.into_iter().flatten().collect(),
    })
}

/// Rank histogram of the single relevant item under the beta score model:
/// sample one positive and K-1 negative scores, count how many negatives beat
/// the positive. Entry r is the number of trials landing at rank r+1.
pub fn mc_rank_histogram(
    k: usize,
    prior: &BetaScorePrior,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<u64>> {
    if k < 2 {
        return Err(Error::contract(format!("rank histogram needs K >= 2, got {k}")));
    }
    const CHUNK: u64 = 8192;
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Vec<u64>> {
            let mut rng = derive_rng(master_seed, "rank_hist", chunk);
            let mut hist = vec![0u64; k];
            let in_chunk = CHUNK.min(trials - chunk * CHUNK);
            let positive = rand_distr::Beta::new(prior.alpha_pos, prior.beta_pos)
                .map_err(|e| Error::contract(format!("positive-class beta: {e}")))?;
            let negative = rand_distr::Beta::new(prior.alpha_neg, prior.beta_neg)
                .map_err(|e| Error::contract(format!("negative-class beta: {e}")))?;
            use rand_distr::Distribution;
            for _ in 0..in_chunk {
                let pos: f64 = positive.sample(&mut rng);
                let mut beaten = 0usize;
                for _ in 0..k - 1 {
                    let neg: f64 = negative.sample(&mut rng);
                    if neg > pos {
                        beaten += 1;
                    }
                }
                hist[beaten] += 1;
            }
            Ok(hist)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hist = vec![0u64; k];
    for partial in partials {
        for (total, part) in hist.iter_mut().zip(partial) {
            *total += part;
        }
    }
    Ok(hist)
}

/// Configuration of one end-to-end simulation: label placement, score
/// sampling from the prior, pointwise sort, strategy application, metric
/// evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: usize,
    /// Number of relevant items per trial (1 keeps the analytical regime).
    pub positives: usize,
    pub prior: BetaScorePrior,
    pub oracle: OracleParams,
    pub strategy: StrategySpec,
    pub trials: u64,
    pub master_seed: u64,
    pub ndcg_cutoffs: Vec<usize>,
    pub log_base: LogBase,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::contract(format!("simulation needs K >= 2, got {}", self.k)));
        }
        if self.positives == 0 || self.positives >= self.k {
            return Err(Error::contract(format!(
                "positives must lie in [1, K-1], got {} for K={}",
                self.positives, self.k
            )));
        }
        if self.trials == 0 {
            return Err(Error::contract("simulation needs at least 1 trial"));
        }
        if self.ndcg_cutoffs.iter().any(|&c| c == 0) {
            return Err(Error::contract("ndcg cutoffs must be >= 1"));
        }
        self.strategy.validate(self.k)
    }
}

/// Normal-approximation summary of one metric across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MetricEstimate {
    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std_error = (var / n).sqrt();
        MetricEstimate {
            mean,
            std_error,
            ci_low: mean - 1.96 * std_error,
            ci_high: mean + 1.96 * std_error,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.ci_low..=self.ci_high).contains(&value)
    }
}

/// Aggregated outcome of [`simulate_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    /// (metric name, estimate) pairs in a fixed order: auc, mrr, ndcg@c...
    pub metrics: Vec<(String, MetricEstimate)>,
    /// Comparator calls per trial (identical across trials by construction).
    pub comparisons_per_trial: u64,
    /// First-relevant-rank counts of the pointwise ranking, entry r = rank r+1.
    pub hist_before: Vec<u64>,
    /// Same histogram after the strategy.
    pub hist_after: Vec<u64>,
    /// Trials where rank 1 held a relevant item before the strategy but not
    /// after.
    pub z1_regressions: u64,
    /// Trials where the strategy increased the inversion count.
    pub inversion_increases: u64,
}

impl PipelineReport {
    pub fn metric(&self, name: &str) -> Option<&MetricEstimate> {
        self.metrics
            .iter()
            .find(|(metric, _)| metric == name)
            .map(|(_, estimate)| estimate)
    }
}

struct TrialOutcome {
    values: Vec<f64>,
    first_before: usize,
    first_after: usize,
    z1_regressed: bool,
    inversions_increased: bool,
    comparisons: u64,
}

fn metric_names(config: &PipelineConfig) -> Vec<String> {
    let mut names = vec!["auc".to_string(), "mrr".to_string()];
    for &cutoff in &config.ndcg_cutoffs {
        names.push(format!("ndcg@{cutoff}"));
    }
    names
}

fn run_trial(config: &PipelineConfig, trial: u64) -> Result<TrialOutcome> {
    let mut rng = derive_rng(config.master_seed, "trial", trial);

    let mut labels = vec![false; config.k];
    if config.positives == 1 {
        labels[uniform_index(config.k, &mut rng)] = true;
    } else {
        let mut indices: Vec<usize> = (0..config.k).collect();
        shuffle_in_place(&mut indices, &mut rng);
        for &idx in &indices[..config.positives] {
            labels[idx] = true;
        }
    }
    let scores = sample_pointwise_scores(&labels, &config.prior, &mut rng)?;
    let impression = Impression::new(
        format!("trial-{trial}"),
        labels
            .iter()
            .zip(&scores)
            .enumerate()
            .map(|(i, (&label, &score))| {
                CandidateRecord::new(format!("c{i}"), label).with_score(score)
            })
            .collect(),
    )?;

    let before = pointwise_sort(&impression)?;
    let z_before = relevance_of(&before, &impression)?;
    let mut oracle = OracleComparator::new(config.oracle);
    let after = apply_strategy(&impression, &config.strategy, &mut oracle, &mut rng)?;
    let z_after = relevance_of(&after, &impression)?;

    let mut values = Vec::with_capacity(2 + config.ndcg_cutoffs.len());
    values.push(auc_from_relevance(&z_after)?);
    values.push(reciprocal_rank(&z_after)?);
    for &cutoff in &config.ndcg_cutoffs {
        values.push(ndcg_at_k_of_relevance(&z_after, cutoff, config.log_base)?);
    }

    Ok(TrialOutcome {
        values,
        first_before: z_before.first_relevant_rank().expect("has a positive"),
        first_after: z_after.first_relevant_rank().expect("has a positive"),
        z1_regressed: z_before.as_slice()[0] && !z_after.as_slice()[0],
        inversions_increased: z_after.inversions() > z_before.inversions(),
        comparisons: after.comparisons_used,
    })
}

/// Runs the full two-stage pipeline for every trial and aggregates metric
/// estimates, rank histograms, and per-trial regression counters.
pub fn simulate_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    config.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect::<Result<Vec<_>>>()?;

    let names = metric_names(config);
    let mut metrics = Vec::with_capacity(names.len());
    for (idx, name) in names.into_iter().enumerate() {
        let samples: Vec<f64> = outcomes.iter().map(|o| o.values[idx]).collect();
        metrics.push((name, MetricEstimate::from_samples(&samples)));
    }

    let mut hist_before = vec![0u64; config.k];
    let mut hist_after = vec![0u64; config.k];
    let mut z1_regressions = 0u64;
    let mut inversion_increases = 0u64;
    let comparisons_per_trial = outcomes[0].comparisons;
    for outcome in &outcomes {
        debug_assert_eq!(outcome.comparisons, comparisons_per_trial);
        hist_before[outcome.first_before - 1] += 1;
        hist_after[outcome.first_after - 1] += 1;
        z1_regressions += outcome.z1_regressed as u64;
        inversion_increases += outcome.inversions_increased as u64;
    }

    Ok(PipelineReport {
        config: config.clone(),
        metrics,
        comparisons_per_trial,
        hist_before,
        hist_after,
        z1_regressions,
        inversion_increases,
    })
}

/// Analytical companion of a sweep cell, present whenever the
/// single-relevant-item machinery applies (one positive; pointwise or
/// full-list RTL strategy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPrediction {
    pub pi: Vec<f64>,
    pub expected_mrr_pointwise: f64,
    pub expected_mrr_after: f64,
    pub gain: f64,
    /// Positive-gain condition verdict before each pass (alpha = 0..passes).
    pub condition_holds_per_pass: Vec<bool>,
    pub ratio_monotone: bool,
}

/// One cell of an ablation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub prior_index: usize,
    pub oracle_index: usize,
    pub strategy_index: usize,
    pub report: PipelineReport,
    pub analytic: Option<AnalyticPrediction>,
}

/// Grid specification for [`ablation_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub k: usize,
    pub positives: usize,
    pub priors: Vec<BetaScorePrior>,
    pub oracles: Vec<OracleParams>,
    pub strategies: Vec<StrategySpec>,
    pub trials: u64,
    pub master_seed: u64,
    pub ndcg_cutoffs: Vec<usize>,
    pub log_base: LogBase,
    pub quadrature_tol: f64,
}

/// Runs every (prior, oracle, strategy) cell of the grid. All cells share the
/// master seed: per-trial streams depend only on (seed, trial index), so cell
/// comparisons ride on common random numbers.
pub fn ablation_sweep(grid: &SweepGrid) -> Result<Vec<SweepCell>> {
    if grid.priors.is_empty() || grid.oracles.is_empty() || grid.strategies.is_empty() {
        return Err(Error::contract("sweep grid must have priors, oracles, and strategies"));
    }
    let mut cells = Vec::new();
    for prior_index in 0..grid.priors.len() {
        for oracle_index in 0..grid.oracles.len() {
            for strategy_index in 0..grid.strategies.len() {
                cells.push((prior_index, oracle_index, strategy_index));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(prior_index, oracle_index, strategy_index)| -> Result<SweepCell> {
            let config = PipelineConfig {
                k: grid.k,
                positives: grid.positives,
                prior: grid.priors[prior_index],
                oracle: grid.oracles[oracle_index],
                strategy: grid.strategies[strategy_index],
                trials: grid.trials,
                master_seed: grid.master_seed,
                ndcg_cutoffs: grid.ndcg_cutoffs.clone(),
                log_base: grid.log_base,
            };
            let report = simulate_pipeline(&config)?;
            let analytic = analytic_prediction(&config, grid.quadrature_tol)?;
            Ok(SweepCell {
                prior_index,
                oracle_index,
                strategy_index,
                report,
                analytic,
            })
        })
        .collect()
}

/// Computes the analytical column when the theory covers the cell.
pub fn analytic_prediction(
    config: &PipelineConfig,
    quadrature_tol: f64,
) -> Result<Option<AnalyticPrediction>> {
    use crate::markov::{corollary_check, expected_metric, TransitionMatrix};
    use crate::metrics::{metric_vector, MetricSpec};
    use crate::priors::{monotonicity_check, state_distribution_from_beta};

    if config.positives != 1 {
        return Ok(None);
    }
    let passes = match config.strategy {
        StrategySpec::Pointwise => 0,
        StrategySpec::Rtl { passes, top_k } if top_k == config.k => passes,
        _ => return Ok(None),
    };
    let report = state_distribution_from_beta(config.k, &config.prior, quadrature_tol)?;
    let pi = report.distribution;
    let matrix = TransitionMatrix::build(config.k, config.oracle.mu, config.oracle.nu)?;
    let delta = metric_vector(&MetricSpec::mrr(), config.k)?;
    let pointwise = expected_metric(&pi, &matrix, &delta, 0)?;
    let after = expected_metric(&pi, &matrix, &delta, passes)?;
    let condition_holds_per_pass = (0..passes)
        .map(|alpha| {
            corollary_check(&pi, &matrix, alpha, config.oracle.mu, config.oracle.nu)
                .map(|verdict| verdict.holds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(AnalyticPrediction {
        pi: pi.as_slice().to_vec(),
        expected_mrr_pointwise: pointwise,
        expected_mrr_after: after,
        gain: after - pointwise,
        condition_holds_per_pass,
        ratio_monotone: monotonicity_check(&pi).holds(),
    }))
}
