//! `theory`: the analytical pipeline on explicit inputs. Builds the transition
//! matrix for (K, μ, ν), resolves the initial state distribution (explicit π
//! or beta-prior quadrature), and reports expected metrics, per-pass gains,
//! positive-gain condition verdicts, and the gain decomposition.

use std::path::PathBuf;

use serde_json::json;

use rtlrank_core::markov::{
    corollary_check, expected_metric, gain_decomposition, StateDistribution, TransitionMatrix,
};
use rtlrank_core::metrics::{metric_vector, LogBase, MetricFamily, MetricSpec};
use rtlrank_core::priors::{monotonicity_check, state_distribution_from_beta, BetaScorePrior};

use crate::error::{CliError, CliResult};
use crate::report::{
    crate_version, csv_writer, ensure_out_dir, finish_csv, fmt_f64, write_manifest, write_record,
};

#[derive(Debug, Clone)]
pub struct TheoryParams {
    pub k: usize,
    pub mu: f64,
    pub nu: f64,
    /// Explicit state distribution; exclusive with `prior`.
    pub pi: Option<Vec<f64>>,
    pub prior: Option<BetaScorePrior>,
    pub passes: u32,
    pub metric: MetricFamily,
    pub log_base: LogBase,
    pub quad_tol: f64,
    pub out_dir: PathBuf,
}

/// Key numbers, returned for tests and printed for humans.
#[derive(Debug, Clone)]
pub struct TheoryOutput {
    pub pi: Vec<f64>,
    pub expected_by_pass: Vec<f64>,
    /// expected_by_pass[p+1] - expected_by_pass[p].
    pub incremental_gains: Vec<f64>,
    pub condition_holds_per_pass: Vec<bool>,
    pub decomposition_by_pass: Vec<Vec<f64>>,
    pub monotonicity_holds: Option<bool>,
}

pub fn run_theory(params: &TheoryParams) -> CliResult<TheoryOutput> {
    let spec = match params.metric {
        MetricFamily::Mrr => MetricSpec::mrr(),
        MetricFamily::Dcg => MetricSpec::dcg(params.log_base),
        other => {
            return Err(CliError::config(format!(
                "theory supports additive metrics (mrr, dcg), got {other:?}"
            )))
        }
    };

    let (pi, quadrature_info) = match (&params.pi, &params.prior) {
        (Some(_), Some(_)) => {
            return Err(CliError::config("give either --pi or --prior, not both"))
        }
        (Some(values), None) => {
            if values.len() != params.k {
                return Err(CliError::config(format!(
                    "--pi has {} entries but K={}",
                    values.len(),
                    params.k
                )));
            }
            (StateDistribution::new(values.clone())?, None)
        }
        (None, Some(prior)) => {
            let report = state_distribution_from_beta(params.k, prior, params.quad_tol)?;
            let info = json!({
                "raw_sum": report.raw_sum,
                "max_error_bound": report.max_error_bound,
                "evaluations": report.evaluations,
            });
            (report.distribution, Some(info))
        }
        (None, None) => {
            return Err(CliError::config(
                "the initial distribution is required: --pi or --prior",
            ))
        }
    };

    let matrix = TransitionMatrix::build(params.k, params.mu, params.nu)?;
    let delta = metric_vector(&spec, params.k)?;

    let mut expected_by_pass = Vec::with_capacity(params.passes as usize + 1);
    for pass in 0..=params.passes {
        expected_by_pass.push(expected_metric(&pi, &matrix, &delta, pass)?);
    }
    let incremental_gains: Vec<f64> = expected_by_pass
        .windows(2)
        .map(|pair| pair[1] - pair[0])
        .collect();
    let verdicts = (0..params.passes)
        .map(|alpha| corollary_check(&pi, &matrix, alpha, params.mu, params.nu))
        .collect::<Result<Vec<_>, _>>()?;
    let decomposition_by_pass = if params.metric == MetricFamily::Mrr {
        (0..params.passes)
            .map(|alpha| {
                let pushed = matrix.apply_n(&pi, alpha);
                gain_decomposition(&pushed, params.mu, params.nu, &spec)
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let monotonicity = params
        .prior
        .map(|_| monotonicity_check(&pi).holds());

    ensure_out_dir(&params.out_dir)?;
    let mut outputs = Vec::new();

    // transition.csv: the full matrix, one row per source state.
    let path = params.out_dir.join("transition.csv");
    let mut writer = csv_writer(&path)?;
    let mut header = vec!["from_state".to_string()];
    header.extend((1..=params.k).map(|j| format!("to_{j}")));
    write_record(&mut writer, &path, &header)?;
    for i in 0..params.k {
        let mut row = vec![(i + 1).to_string()];
        row.extend(matrix.row(i).iter().map(|&v| fmt_f64(v)));
        write_record(&mut writer, &path, &row)?;
    }
    finish_csv(writer, &path)?;
    outputs.push(path);

    // states.csv: π T^p for every pass count.
    let path = params.out_dir.join("states.csv");
    let mut writer = csv_writer(&path)?;
    write_record(&mut writer, &path, ["pass", "state", "probability"])?;
    for pass in 0..=params.passes {
        let pushed = matrix.apply_n(&pi, pass);
        for (state, &p) in pushed.as_slice().iter().enumerate() {
            write_record(
                &mut writer,
                &path,
                [pass.to_string(), (state + 1).to_string(), fmt_f64(p)],
            )?;
        }
    }
    finish_csv(writer, &path)?;
    outputs.push(path);

    // summary.csv: expected metric per pass with incremental gain and the
    // condition verdict governing the next pass.
    let path = params.out_dir.join("summary.csv");
    let mut writer = csv_writer(&path)?;
    write_record(
        &mut writer,
        &path,
        [
            "pass",
            "expected_metric",
            "incremental_gain",
            "cumulative_gain",
            "next_pass_condition_holds",
            "next_pass_mu_bound",
            "metric",
            "log_base",
            "k",
            "mu",
            "nu",
        ],
    )?;
    for pass in 0..=params.passes {
        let condition = if (pass as usize) < verdicts.len() {
            let v = &verdicts[pass as usize];
            (
                v.holds.to_string(),
                v.tightest_bound.map(fmt_f64).unwrap_or_default(),
            )
        } else {
            (String::new(), String::new())
        };
        write_record(
            &mut writer,
            &path,
            [
                pass.to_string(),
                fmt_f64(expected_by_pass[pass as usize]),
                if pass == 0 {
                    String::new()
                } else {
                    fmt_f64(incremental_gains[pass as usize - 1])
                },
                fmt_f64(expected_by_pass[pass as usize] - expected_by_pass[0]),
                condition.0,
                condition.1,
                format!("{:?}", params.metric).to_lowercase(),
                params.log_base.to_string(),
                params.k.to_string(),
                fmt_f64(params.mu),
                fmt_f64(params.nu),
            ],
        )?;
    }
    finish_csv(writer, &path)?;
    outputs.push(path);

    // constraints.csv: every positive-gain constraint per pass.
    let path = params.out_dir.join("constraints.csv");
    let mut writer = csv_writer(&path)?;
    write_record(
        &mut writer,
        &path,
        ["alpha", "index", "status", "mu_bound"],
    )?;
    for (alpha, verdict) in verdicts.iter().enumerate() {
        for constraint in &verdict.constraints {
            write_record(
                &mut writer,
                &path,
                [
                    alpha.to_string(),
                    constraint.index.to_string(),
                    format!("{:?}", constraint.status).to_lowercase(),
                    constraint.mu_bound.map(fmt_f64).unwrap_or_default(),
                ],
            )?;
        }
    }
    finish_csv(writer, &path)?;
    outputs.push(path);

    // decomposition.csv: order-graded gain components per pass (MRR only).
    if !decomposition_by_pass.is_empty() {
        let path = params.out_dir.join("decomposition.csv");
        let mut writer = csv_writer(&path)?;
        write_record(&mut writer, &path, ["alpha", "order", "component"])?;
        for (alpha, components) in decomposition_by_pass.iter().enumerate() {
            for (order, &component) in components.iter().enumerate() {
                write_record(
                    &mut writer,
                    &path,
                    [
                        alpha.to_string(),
                        (order + 1).to_string(),
                        fmt_f64(component),
                    ],
                )?;
            }
        }
        finish_csv(writer, &path)?;
        outputs.push(path);
    }

    let manifest = json!({
        "command": "theory",
        "version": crate_version(),
        "params": {
            "k": params.k,
            "mu": params.mu,
            "nu": params.nu,
            "pi": params.pi.clone(),
            "prior": params.prior,
            "passes": params.passes,
            "metric": format!("{:?}", params.metric).to_lowercase(),
            "log_base": params.log_base.to_string(),
            "quad_tol": params.quad_tol,
        },
        "quadrature": quadrature_info,
        "initial_distribution": pi.as_slice(),
        "monotonicity_holds": monotonicity,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_manifest(&params.out_dir, &manifest)?;

    println!(
        "K={} mu={} nu={} metric={:?}",
        params.k, params.mu, params.nu, params.metric
    );
    println!("pi = {:?}", pi.as_slice());
    for pass in 0..=params.passes {
        let gain_note = if pass == 0 {
            String::new()
        } else {
            format!(
                "  (gain {} over pass {})",
                fmt_f64(incremental_gains[pass as usize - 1]),
                pass - 1
            )
        };
        println!(
            "pass {pass}: expected = {}{gain_note}",
            fmt_f64(expected_by_pass[pass as usize])
        );
    }
    for (alpha, verdict) in verdicts.iter().enumerate() {
        println!(
            "condition before pass {}: holds = {}{}",
            alpha + 1,
            verdict.holds,
            verdict
                .tightest_bound
                .map(|b| format!(", tightest mu bound {}", fmt_f64(b)))
                .unwrap_or_default()
        );
    }
    if let Some(holds) = monotonicity {
        println!("prior ratio-monotonicity: {holds}");
    }

    Ok(TheoryOutput {
        pi: pi.as_slice().to_vec(),
        expected_by_pass,
        incremental_gains,
        condition_holds_per_pass: verdicts.iter().map(|v| v.holds).collect(),
        decomposition_by_pass,
        monotonicity_holds: monotonicity,
    })
}
