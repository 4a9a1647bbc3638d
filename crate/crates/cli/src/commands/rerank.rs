//! `rerank`: applies inference strategies to a real impression file and
//! reports per-impression rankings plus per-strategy metric summaries.
//!
//! The pairwise comparator defaults to the preference strengths stored in the
//! file (deterministic Bradley-Terry thresholding). A (μ, ν) oracle — given
//! explicitly or estimated from the file — can be substituted for calibration
//! studies on labeled data; it consults ground-truth labels, so its metrics
//! are diagnostic, not predictions.
//!
//! Prefix parameters (top_k, window) larger than an impression's candidate
//! count are clamped to it, and the effective strategy is recorded per row;
//! real corpora mix impression sizes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use rtlrank_core::comparators::{
    OracleComparator, OracleParams, PairwiseComparator, PreferenceTable, TableComparator,
};
use rtlrank_core::impression::{relevance_of, Impression};
use rtlrank_core::metrics::{auc_from_ranking, ndcg_at_k, reciprocal_rank, LogBase};
use rtlrank_core::seeding::derive_rng_keyed;
use rtlrank_core::strategies::{apply_strategy, StrategySpec};

use crate::error::{CliError, CliResult};
use crate::estimate::{estimate_oracle_params, OracleEstimate};
use crate::formats::parse_impressions_path;
use crate::report::{
    crate_version, csv_writer, ensure_out_dir, finish_csv, fmt_f64, write_manifest, write_record,
};

#[derive(Debug, Clone)]
pub enum ComparatorChoice {
    /// Stored per-item preference strengths, thresholded deterministically.
    PrefTable,
    /// Ground-truth-aware stochastic oracle with explicit parameters.
    Oracle(OracleParams),
    /// Oracle with (μ, ν) estimated from the file's preference strengths.
    OracleFromData,
}

#[derive(Debug, Clone)]
pub struct RerankParams {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub strategies: Vec<StrategySpec>,
    pub comparator: ComparatorChoice,
    pub seed: u64,
    pub log_base: LogBase,
    pub ndcg_cutoffs: Vec<usize>,
    pub strict: bool,
    pub estimate_oracle: bool,
}

/// Per-strategy aggregate over the evaluated impressions.
#[derive(Debug, Clone)]
pub struct StrategySummary {
    pub strategy: StrategySpec,
    pub evaluated: u64,
    pub skipped: u64,
    /// Mean metric values keyed by name (auc, mrr, ndcg@c).
    pub means: BTreeMap<String, f64>,
    pub mean_comparisons: f64,
    pub total_comparisons: u64,
}

#[derive(Debug, Clone)]
pub struct RerankOutput {
    pub impressions: u64,
    pub skipped_lines: u64,
    pub summaries: Vec<StrategySummary>,
    pub estimate: Option<OracleEstimate>,
}

/// Caps prefix parameters at the impression size; returns the effective spec.
fn clamp_spec(spec: StrategySpec, k: usize) -> StrategySpec {
    match spec {
        StrategySpec::Rtl { passes, top_k } => StrategySpec::Rtl {
            passes,
            top_k: top_k.min(k),
        },
        StrategySpec::NWindow { window } => StrategySpec::NWindow {
            window: window.min(k),
        },
        StrategySpec::SWindow { window, skip } => StrategySpec::SWindow {
            window: window.min(k),
            skip,
        },
        other => other,
    }
}

struct ImpressionRow {
    impression_id: String,
    k: usize,
    effective: StrategySpec,
    comparisons: u64,
    ranked_ids: String,
    metrics: Vec<f64>,
}

enum ImpressionOutcome {
    Row(Box<ImpressionRow>),
    Skipped { impression_id: String, reason: String },
}

fn metric_names(cutoffs: &[usize]) -> Vec<String> {
    let mut names = vec!["auc".to_string(), "mrr".to_string()];
    names.extend(cutoffs.iter().map(|c| format!("ndcg@{c}")));
    names
}

fn rerank_one(
    impression: &Impression,
    requested: StrategySpec,
    comparator_choice: &ComparatorChoice,
    oracle_params: Option<OracleParams>,
    params: &RerankParams,
) -> CliResult<ImpressionOutcome> {
    let k = impression.len();
    let effective = clamp_spec(requested, k);
    let needs_comparisons = effective.expected_comparisons(k) > 0;

    if effective.requires_scores() {
        let missing = impression
            .candidates()
            .iter()
            .filter(|c| c.score.is_none())
            .count();
        if missing > 0 {
            return Ok(ImpressionOutcome::Skipped {
                impression_id: impression.id().to_string(),
                reason: format!("{missing} candidate(s) missing a score"),
            });
        }
    }

    let table;
    let mut table_comparator;
    let mut oracle_comparator;
    let comparator: &mut dyn PairwiseComparator = match comparator_choice {
        ComparatorChoice::PrefTable => {
            if needs_comparisons {
                let missing = impression
                    .candidates()
                    .iter()
                    .filter(|c| c.pref_strength.is_none())
                    .count();
                if missing > 0 {
                    return Ok(ImpressionOutcome::Skipped {
                        impression_id: impression.id().to_string(),
                        reason: format!("{missing} candidate(s) missing a preference strength"),
                    });
                }
            }
            table = PreferenceTable::from_strengths(
                impression
                    .candidates()
                    .iter()
                    .filter_map(|c| c.pref_strength.map(|d| (c.id.clone(), d))),
            )?;
            table_comparator = TableComparator::new(&table);
            &mut table_comparator
        }
        ComparatorChoice::Oracle(_) | ComparatorChoice::OracleFromData => {
            oracle_comparator = OracleComparator::new(
                oracle_params.expect("oracle parameters resolved before reranking"),
            );
            &mut oracle_comparator
        }
    };

    let mut rng = derive_rng_keyed(params.seed, "impression", impression.id());
    let ranking = apply_strategy(impression, &effective, comparator, &mut rng)?;
    let z = relevance_of(&ranking, impression)?;

    let mut metrics = Vec::with_capacity(2 + params.ndcg_cutoffs.len());
    metrics.push(auc_from_ranking(&ranking, impression)?);
    metrics.push(reciprocal_rank(&z)?);
    for &cutoff in &params.ndcg_cutoffs {
        metrics.push(ndcg_at_k(&ranking, impression, cutoff, params.log_base)?);
    }

    let ranked_ids = ranking
        .order()
        .iter()
        .map(|&idx| impression.candidates()[idx].id.as_str())
        .collect::<Vec<_>>()
        .join("|");

    Ok(ImpressionOutcome::Row(Box::new(ImpressionRow {
        impression_id: impression.id().to_string(),
        k,
        effective,
        comparisons: ranking.comparisons_used,
        ranked_ids,
        metrics,
    })))
}

pub fn run_rerank(params: &RerankParams) -> CliResult<RerankOutput> {
    if params.strategies.is_empty() {
        return Err(CliError::config("rerank needs at least one strategy"));
    }
    let parsed = parse_impressions_path(&params.input, params.strict)?;
    if parsed.impressions.is_empty() {
        return Err(CliError::Parse {
            line: None,
            byte_offset: None,
            message: format!("no usable impressions in {}", params.input.display()),
        });
    }

    let estimate = match (&params.comparator, params.estimate_oracle) {
        (ComparatorChoice::OracleFromData, _) | (_, true) => {
            Some(estimate_oracle_params(&parsed.impressions)?)
        }
        _ => None,
    };
    let oracle_params = match &params.comparator {
        ComparatorChoice::Oracle(p) => Some(*p),
        ComparatorChoice::OracleFromData => {
            let e = estimate.as_ref().expect("estimated above");
            Some(OracleParams::new(e.mu_hat, e.nu_hat)?)
        }
        ComparatorChoice::PrefTable => None,
    };

    ensure_out_dir(&params.out_dir)?;
    let names = metric_names(&params.ndcg_cutoffs);
    let mut outputs = Vec::new();

    let rankings_path = params.out_dir.join("rankings.csv");
    let mut rankings = csv_writer(&rankings_path)?;
    let mut header = vec![
        "impression_id".to_string(),
        "strategy".to_string(),
        "effective_strategy".to_string(),
        "k".to_string(),
        "comparisons_used".to_string(),
    ];
    header.extend(names.iter().cloned());
    header.extend(["ranked_ids", "seed", "log_base"].map(str::to_string));
    write_record(&mut rankings, &rankings_path, &header)?;

    let mut summaries = Vec::new();
    for &strategy in &params.strategies {
        let outcomes: Vec<ImpressionOutcome> = parsed
            .impressions
            .par_iter()
            .map(|impression| {
                rerank_one(impression, strategy, &params.comparator, oracle_params, params)
            })
            .collect::<CliResult<Vec<_>>>()?;

        let mut evaluated = 0u64;
        let mut skipped = 0u64;
        let mut sums = vec![0.0f64; names.len()];
        let mut total_comparisons = 0u64;
        for outcome in &outcomes {
            match outcome {
                ImpressionOutcome::Row(row) => {
                    evaluated += 1;
                    total_comparisons += row.comparisons;
                    for (sum, &value) in sums.iter_mut().zip(&row.metrics) {
                        *sum += value;
                    }
                    let mut record = vec![
                        row.impression_id.clone(),
                        strategy.to_string(),
                        row.effective.to_string(),
                        row.k.to_string(),
                        row.comparisons.to_string(),
                    ];
                    record.extend(row.metrics.iter().map(|&v| fmt_f64(v)));
                    record.extend([
                        row.ranked_ids.clone(),
                        params.seed.to_string(),
                        params.log_base.to_string(),
                    ]);
                    write_record(&mut rankings, &rankings_path, &record)?;
                }
                ImpressionOutcome::Skipped { impression_id, reason } => {
                    if params.strict {
                        return Err(CliError::config(format!(
                            "impression `{impression_id}` cannot run {strategy}: {reason}"
                        )));
                    }
                    skipped += 1;
                }
            }
        }
        if evaluated == 0 {
            return Err(CliError::config(format!(
                "strategy {strategy}: every impression was skipped (missing scores or preferences?)"
            )));
        }
        let means: BTreeMap<String, f64> = names
            .iter()
            .cloned()
            .zip(sums.iter().map(|s| s / evaluated as f64))
            .collect();
        summaries.push(StrategySummary {
            strategy,
            evaluated,
            skipped,
            means,
            mean_comparisons: total_comparisons as f64 / evaluated as f64,
            total_comparisons,
        });
    }
    finish_csv(rankings, &rankings_path)?;
    outputs.push(rankings_path);

    let summary_path = params.out_dir.join("summary.csv");
    let mut summary = csv_writer(&summary_path)?;
    let mut header = vec![
        "strategy".to_string(),
        "impressions".to_string(),
        "skipped".to_string(),
    ];
    header.extend(names.iter().cloned());
    header.extend(
        ["mean_comparisons", "total_comparisons", "seed", "log_base", "comparator"]
            .map(str::to_string),
    );
    write_record(&mut summary, &summary_path, &header)?;
    let comparator_label = match &params.comparator {
        ComparatorChoice::PrefTable => "pref_table".to_string(),
        ComparatorChoice::Oracle(p) => format!("oracle(mu={},nu={})", fmt_f64(p.mu), fmt_f64(p.nu)),
        ComparatorChoice::OracleFromData => {
            let p = oracle_params.expect("resolved");
            format!("oracle_from_data(mu={},nu={})", fmt_f64(p.mu), fmt_f64(p.nu))
        }
    };
    for s in &summaries {
        let mut record = vec![
            s.strategy.to_string(),
            s.evaluated.to_string(),
            s.skipped.to_string(),
        ];
        record.extend(names.iter().map(|n| fmt_f64(s.means[n])));
        record.extend([
            fmt_f64(s.mean_comparisons),
            s.total_comparisons.to_string(),
            params.seed.to_string(),
            params.log_base.to_string(),
            comparator_label.clone(),
        ]);
        write_record(&mut summary, &summary_path, &record)?;
    }
    finish_csv(summary, &summary_path)?;
    outputs.push(summary_path);

    let manifest = json!({
        "command": "rerank",
        "version": crate_version(),
        "input": params.input.display().to_string(),
        "seed": params.seed,
        "log_base": params.log_base.to_string(),
        "ndcg_cutoffs": params.ndcg_cutoffs,
        "strategies": params.strategies.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "comparator": comparator_label,
        "strict": params.strict,
        "impressions": parsed.impressions.len(),
        "skipped_lines": parsed.skipped,
        "oracle_estimate": estimate,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_manifest(&params.out_dir, &manifest)?;

    for s in &summaries {
        let metrics = names
            .iter()
            .map(|n| format!("{n}={}", fmt_f64(s.means[n])))
            .collect::<Vec<_>>()
            .join(" ");
        println!(
            "{}: {} impressions ({} skipped), {} | comparisons mean {} total {}",
            s.strategy,
            s.evaluated,
            s.skipped,
            metrics,
            fmt_f64(s.mean_comparisons),
            s.total_comparisons
        );
    }

    Ok(RerankOutput {
        impressions: parsed.impressions.len() as u64,
        skipped_lines: parsed.skipped.len() as u64,
        summaries,
        estimate,
    })
}
