//! `simulate`: one seeded Monte Carlo pipeline run, written as metrics.csv
//! (estimates with confidence intervals), histogram.csv (first-relevant-rank
//! counts before/after the strategy), and a manifest.

use std::path::PathBuf;

use serde_json::json;

use rtlrank_core::sim::{simulate_pipeline, PipelineConfig, PipelineReport};

use crate::error::CliResult;
use crate::report::{
    crate_version, csv_writer, ensure_out_dir, finish_csv, fmt_f64, write_manifest, write_record,
};

#[derive(Debug, Clone)]
pub struct SimulateParams {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
}

pub fn run_simulate(params: &SimulateParams) -> CliResult<PipelineReport> {
    let report = simulate_pipeline(&params.config)?;
    ensure_out_dir(&params.out_dir)?;
    let mut outputs = Vec::new();

    let config = &params.config;
    let strategy = config.strategy.to_string();

    let path = params.out_dir.join("metrics.csv");
    let mut writer = csv_writer(&path)?;
    write_record(
        &mut writer,
        &path,
        [
            "metric",
            "mean",
            "std_error",
            "ci_low",
            "ci_high",
            "strategy",
            "k",
            "positives",
            "mu",
            "nu",
            "tie_swap",
            "prior",
            "trials",
            "seed",
            "log_base",
            "comparisons_per_trial",
        ],
    )?;
    let prior = format!(
        "({},{})/({},{})",
        fmt_f64(config.prior.alpha_pos),
        fmt_f64(config.prior.beta_pos),
        fmt_f64(config.prior.alpha_neg),
        fmt_f64(config.prior.beta_neg)
    );
    for (name, estimate) in &report.metrics {
        write_record(
            &mut writer,
            &path,
            [
                name.clone(),
                fmt_f64(estimate.mean),
                fmt_f64(estimate.std_error),
                fmt_f64(estimate.ci_low),
                fmt_f64(estimate.ci_high),
                strategy.clone(),
                config.k.to_string(),
                config.positives.to_string(),
                fmt_f64(config.oracle.mu),
                fmt_f64(config.oracle.nu),
                fmt_f64(config.oracle.tie_swap),
                prior.clone(),
                config.trials.to_string(),
                config.master_seed.to_string(),
                config.log_base.to_string(),
                report.comparisons_per_trial.to_string(),
            ],
        )?;
    }
    finish_csv(writer, &path)?;
    outputs.push(path);

    let path = params.out_dir.join("histogram.csv");
    let mut writer = csv_writer(&path)?;
    write_record(
        &mut writer,
        &path,
        ["rank", "count_pointwise", "count_after", "strategy", "seed"],
    )?;
    for rank in 0..config.k {
        write_record(
            &mut writer,
            &path,
            [
                (rank + 1).to_string(),
                report.hist_before[rank].to_string(),
                report.hist_after[rank].to_string(),
                strategy.clone(),
                config.master_seed.to_string(),
            ],
        )?;
    }
    finish_csv(writer, &path)?;
    outputs.push(path);

    let manifest = json!({
        "command": "simulate",
        "version": crate_version(),
        "config": config,
        "z1_regressions": report.z1_regressions,
        "inversion_increases": report.inversion_increases,
        "comparisons_per_trial": report.comparisons_per_trial,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_manifest(&params.out_dir, &manifest)?;

    for (name, estimate) in &report.metrics {
        println!(
            "{name}: {} ± {} (95% CI [{}, {}])",
            fmt_f64(estimate.mean),
            fmt_f64(1.96 * estimate.std_error),
            fmt_f64(estimate.ci_low),
            fmt_f64(estimate.ci_high)
        );
    }
    println!(
        "comparisons/trial: {}; rank-1 mass {} -> {}",
        report.comparisons_per_trial,
        report.hist_before[0],
        report.hist_after[0]
    );

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rtlrank_core::comparators::OracleParams;
    use rtlrank_core::metrics::LogBase;
    use rtlrank_core::priors::BetaScorePrior;
    use rtlrank_core::strategies::StrategySpec;

    #[test]
    fn writes_deterministic_reports() {
        let config = PipelineConfig {
            k: 4,
            positives: 1,
            prior: BetaScorePrior::new(2.0, 1.0, 1.0, 2.0).unwrap(),
            oracle: OracleParams::new(0.1, 0.8).unwrap(),
            strategy: StrategySpec::Rtl { passes: 1, top_k: 4 },
            trials: 500,
            master_seed: 5,
            ndcg_cutoffs: vec![3],
            log_base: LogBase::Two,
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_simulate(&SimulateParams {
            config: config.clone(),
            out_dir: dir_a.path().to_path_buf(),
        })
        .unwrap();
        run_simulate(&SimulateParams {
            config,
            out_dir: dir_b.path().to_path_buf(),
        })
        .unwrap();
        for file in ["metrics.csv", "histogram.csv"] {
            let a = std::fs::read(dir_a.path().join(file)).unwrap();
            let b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} must be byte-identical");
            assert!(!a.is_empty());
        }
    }
}
