//! `sweep`: the full (priors × oracles × strategies) grid with simulated
//! estimates, analytical prediction columns where the single-relevant theory
//! applies, and per-cell rank histograms.

use std::path::PathBuf;

use serde_json::json;

use rtlrank_core::sim::{ablation_sweep, SweepCell, SweepGrid};

use crate::error::CliResult;
use crate::report::{
    crate_version, csv_writer, ensure_out_dir, finish_csv, fmt_f64, write_manifest, write_record,
};

#[derive(Debug, Clone)]
pub struct SweepParams {
    pub grid: SweepGrid,
    pub out_dir: PathBuf,
}

pub fn run_sweep(params: &SweepParams) -> CliResult<Vec<SweepCell>> {
    let cells = ablation_sweep(&params.grid)?;
    ensure_out_dir(&params.out_dir)?;
    let grid = &params.grid;
    let mut outputs = Vec::new();

    let path = params.out_dir.join("cells.csv");
    let mut writer = csv_writer(&path)?;
    let mut header = vec![
        "cell".to_string(),
        "prior".to_string(),
        "mu".to_string(),
        "nu".to_string(),
        "tie_swap".to_string(),
        "strategy".to_string(),
        "comparisons_per_trial".to_string(),
    ];
    for (name, _) in &cells[0].report.metrics {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_se"));
    }
    header.extend(
        [
            "analytic_expected_mrr_pointwise",
            "analytic_expected_mrr_after",
            "analytic_gain",
            "condition_all_passes_hold",
            "ratio_monotone",
            "trials",
            "seed",
            "log_base",
            "k",
            "positives",
        ]
        .map(str::to_string),
    );
    write_record(&mut writer, &path, &header)?;

    for (index, cell) in cells.iter().enumerate() {
        let prior = grid.priors[cell.prior_index];
        let oracle = grid.oracles[cell.oracle_index];
        let strategy = grid.strategies[cell.strategy_index];
        let mut row = vec![
            index.to_string(),
            format!(
                "({},{})/({},{})",
                fmt_f64(prior.alpha_pos),
                fmt_f64(prior.beta_pos),
                fmt_f64(prior.alpha_neg),
                fmt_f64(prior.beta_neg)
            ),
            fmt_f64(oracle.mu),
            fmt_f64(oracle.nu),
            fmt_f64(oracle.tie_swap),
            strategy.to_string(),
            cell.report.comparisons_per_trial.to_string(),
        ];
        for (_, estimate) in &cell.report.metrics {
            row.push(fmt_f64(estimate.mean));
            row.push(fmt_f64(estimate.std_error));
        }
        match &cell.analytic {
            Some(analytic) => {
                row.push(fmt_f64(analytic.expected_mrr_pointwise));
                row.push(fmt_f64(analytic.expected_mrr_after));
                row.push(fmt_f64(analytic.gain));
                row.push(
                    analytic
                        .condition_holds_per_pass
                        .iter()
                        .all(|&h| h)
                        .to_string(),
                );
                row.push(analytic.ratio_monotone.to_string());
            }
            None => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        row.extend([
            grid.trials.to_string(),
            grid.master_seed.to_string(),
            grid.log_base.to_string(),
            grid.k.to_string(),
            grid.positives.to_string(),
        ]);
        write_record(&mut writer, &path, &row)?;
    }
    finish_csv(writer, &path)?;
    outputs.push(path);

    let path = params.out_dir.join("histograms.csv");
    let mut writer = csv_writer(&path)?;
    write_record(
        &mut writer,
        &path,
        ["cell", "rank", "count_pointwise", "count_after"],
    )?;
    for (index, cell) in cells.iter().enumerate() {
        for rank in 0..grid.k {
            write_record(
                &mut writer,
                &path,
                [
                    index.to_string(),
                    (rank + 1).to_string(),
                    cell.report.hist_before[rank].to_string(),
                    cell.report.hist_after[rank].to_string(),
                ],
            )?;
        }
    }
    finish_csv(writer, &path)?;
    outputs.push(path);

    let manifest = json!({
        "command": "sweep",
        "version": crate_version(),
        "grid": grid,
        "cells": cells.len(),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_manifest(&params.out_dir, &manifest)?;

    println!(
        "swept {} cells ({} priors x {} oracles x {} strategies), reports in {}",
        cells.len(),
        grid.priors.len(),
        grid.oracles.len(),
        grid.strategies.len(),
        params.out_dir.display()
    );
    Ok(cells)
}
