//! Cross-module checks: the transition matrix against an exact enumeration of
//! pass outcomes, the comparison-count complexity contract, and the
//! quadrature -> Markov -> simulation pipeline glued end to end.

use rand::RngCore;

use rtlrank_core::comparators::{
    OracleComparator, OracleParams, PairwiseComparator, ScriptedComparator, SwapDecision,
};
use rtlrank_core::impression::{relevance_of, CandidateRecord, Impression, Ranking, RankingSource};
use rtlrank_core::markov::{expected_metric, gain, theorem1_check, TransitionMatrix};
use rtlrank_core::metrics::{metric_vector, LogBase, MetricSpec};
use rtlrank_core::priors::{state_distribution_from_beta, BetaScorePrior};
use rtlrank_core::seeding::derive_rng;
use rtlrank_core::sim::{simulate_pipeline, PipelineConfig};
use rtlrank_core::strategies::{apply_strategy, rtl_pass, StrategySpec};

fn single_relevant(k: usize, rank: usize) -> Impression {
    Impression::new(
        "imp",
        (1..=k)
            .map(|r| CandidateRecord::new(format!("c{r}"), r == rank).with_score((k - r) as f64))
            .collect(),
    )
    .unwrap()
}

/// Exact distributional oracle for the transition matrix: enumerate every
/// swap-decision pattern of one full RTL pass, weight it by its probability
/// under (mu, nu, tie_swap), and accumulate end-state mass. No Monte Carlo,
/// no tolerance beyond float arithmetic.
#[test]
fn transition_matrix_matches_exact_pass_enumeration() {
    let cases = [
        (0.2, 0.5, 0.5),
        (0.35, 0.8, 0.0),
        (0.0, 1.0, 1.0),
        (0.7, 0.3, 0.25),
    ];
    for (mu, nu, tie) in cases {
        let params = OracleParams::with_tie_swap(mu, nu, tie).unwrap();
        for k in 2..=6usize {
            let matrix = TransitionMatrix::build(k, mu, nu).unwrap();
            for start in 1..=k {
                let impression = single_relevant(k, start);
                let mut end_mass = vec![0.0f64; k];
                for mask in 0u32..(1 << (k - 1)) {
                    let decisions: Vec<bool> =
                        (0..k - 1).map(|bit| mask & (1 << bit) != 0).collect();

                    // Replay the pass to find the end state while computing
                    // the pattern probability from the pair relevances at the
                    // moment of each comparison.
                    let mut z: Vec<bool> = (1..=k).map(|r| r == start).collect();
                    let mut probability = 1.0f64;
                    for (step, &swap) in decisions.iter().enumerate() {
                        let p = k - 2 - step;
                        let threshold = match (z[p], z[p + 1]) {
                            (true, false) => params.mu,
                            (false, true) => params.nu,
                            _ => params.tie_swap,
                        };
                        probability *= if swap { threshold } else { 1.0 - threshold };
                        if swap {
                            z.swap(p, p + 1);
                        }
                    }
                    if probability == 0.0 {
                        continue;
                    }

                    // The actual strategy code must land on the same state.
                    let mut scripted = ScriptedComparator::new(decisions);
                    let mut rng = derive_rng(0, "unused", 0);
                    let identity = Ranking::identity(k, RankingSource::Initial);
                    let after =
                        rtl_pass(&identity, &impression, &mut scripted, k, &mut rng).unwrap();
                    let z_after = relevance_of(&after, &impression).unwrap();
                    let end = z_after.single_relevant_rank().unwrap();
                    assert_eq!(
                        z.iter().position(|&b| b).unwrap() + 1,
                        end,
                        "replay and strategy disagree"
                    );
                    end_mass[end - 1] += probability;
                }
                for (j, &mass) in end_mass.iter().enumerate() {
                    let expected = matrix.entry(start - 1, j);
                    assert!(
                        (mass - expected).abs() <= 1e-12,
                        "K={k} start={start} end={} mass {mass} vs T {expected} \
                         (mu={mu} nu={nu} tie={tie})",
                        j + 1
                    );
                }
            }
        }
    }
}

/// Comparison budgets scale as advertised: RTL is linear in top_k and flat in
/// K, box filling and bubble sort are quadratic in K.
#[test]
fn complexity_contract_linear_vs_quadratic() {
    let mut rng = derive_rng(3, "complexity", 0);
    let oracle_params = OracleParams::new(0.3, 0.6).unwrap();

    let run = |k: usize, spec: StrategySpec, rng: &mut dyn RngCore| -> u64 {
        let imp = single_relevant(k, k / 2 + 1);
        let mut oracle = OracleComparator::new(oracle_params);
        apply_strategy(&imp, &spec, &mut oracle, rng)
            .unwrap()
            .comparisons_used
    };

    // RTL: depends on top_k and passes only.
    for k in [8usize, 16, 32] {
        for (passes, top_k, expected) in [(1u32, 5usize, 4u64), (2, 5, 8), (3, 8, 21)] {
            let spec = StrategySpec::Rtl { passes, top_k };
            assert_eq!(run(k, spec, &mut rng), expected, "K={k} {spec:?}");
        }
    }
    // Quadratic strategies: doubling K quadruples the budget (up to the
    // K(K-1)/2 exact form).
    for spec in [
        StrategySpec::BoxFilling,
        StrategySpec::BubbleFull {
            init: rtlrank_core::strategies::BubbleInit::Pointwise,
        },
    ] {
        let c8 = run(8, spec, &mut rng);
        let c16 = run(16, spec, &mut rng);
        let c32 = run(32, spec, &mut rng);
        assert_eq!(c8, 28);
        assert_eq!(c16, 120);
        assert_eq!(c32, 496);
        assert!(c16 > 3 * c8 && c32 > 3 * c16, "{spec:?} is not quadratic");
    }
}

/// Prior quadrature, gain condition, matrix prediction, and simulation agree
/// end to end on a configuration none of them was tuned to.
#[test]
fn quadrature_markov_simulation_pipeline_agrees() {
    let k = 6;
    let prior = BetaScorePrior::new(2.5, 1.3, 1.1, 2.2).unwrap();
    let (mu, nu) = (0.12, 0.66);

    let pi = state_distribution_from_beta(k, &prior, 1e-10)
        .unwrap()
        .distribution;
    let matrix = TransitionMatrix::build(k, mu, nu).unwrap();
    let delta = metric_vector(&MetricSpec::mrr(), k).unwrap();

    let verdict = theorem1_check(&pi, mu, nu).unwrap();
    let predicted_gain = gain(&pi, &matrix, &delta).unwrap();
    if verdict.holds {
        assert!(predicted_gain > 0.0);
    }
    let predicted = expected_metric(&pi, &matrix, &delta, 2).unwrap();

    let config = PipelineConfig {
        k,
        positives: 1,
        prior,
        oracle: OracleParams::new(mu, nu).unwrap(),
        strategy: StrategySpec::Rtl { passes: 2, top_k: k },
        trials: 150_000,
        master_seed: 27,
        ndcg_cutoffs: vec![],
        log_base: LogBase::Two,
    };
    let report = simulate_pipeline(&config).unwrap();
    let mrr = report.metric("mrr").unwrap();
    assert!(
        (mrr.mean - predicted).abs() < 4.0 * mrr.std_error,
        "simulated {} vs predicted {predicted} (se {})",
        mrr.mean,
        mrr.std_error
    );

    // The pointwise histogram is a draw from pi itself.
    for rank in 0..k {
        let freq = report.hist_before[rank] as f64 / config.trials as f64;
        let p = pi.as_slice()[rank];
        let se = (p * (1.0 - p) / config.trials as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * se, "rank {}: {freq} vs {p}", rank + 1);
    }
}

/// Same-relevance swaps never change the relevance pattern, exhaustively over
/// scripted decision patterns for a multi-relevant list.
#[test]
fn tie_swaps_are_invisible_at_the_relevance_level() {
    let k = 5;
    let labels = [true, true, false, true, false];
    let impression = Impression::new(
        "imp",
        labels
            .iter()
            .enumerate()
            .map(|(i, &label)| CandidateRecord::new(format!("c{i}"), label))
            .collect(),
    )
    .unwrap();

    struct TiesOnly;
    impl PairwiseComparator for TiesOnly {
        fn compare(
            &mut self,
            left: &CandidateRecord,
            right: &CandidateRecord,
            _rng: &mut dyn RngCore,
        ) -> rtlrank_core::Result<SwapDecision> {
            // Swap equal-relevance pairs always, mixed pairs never.
            Ok(SwapDecision::from_bool(left.label == right.label))
        }
    }

    let identity = Ranking::identity(k, RankingSource::Initial);
    let mut rng = derive_rng(0, "unused", 0);
    let mut comparator = TiesOnly;
    let mut ranking = identity.clone();
    for _ in 0..3 {
        ranking = rtl_pass(&ranking, &impression, &mut comparator, k, &mut rng).unwrap();
        let z = relevance_of(&ranking, &impression).unwrap();
        assert_eq!(
            z.as_slice(),
            &labels[..],
            "tie swaps must leave the pattern alone"
        );
    }
    // Candidates did move, though.
    assert_ne!(ranking.order(), identity.order());
}
