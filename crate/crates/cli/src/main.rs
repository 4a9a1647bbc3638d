//! Command-line entry point.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rtlrank_cli::commands::rerank::{run_rerank, ComparatorChoice, RerankParams};
use rtlrank_cli::commands::simulate::{run_simulate, SimulateParams};
use rtlrank_cli::commands::sweep::{run_sweep, SweepParams};
use rtlrank_cli::commands::theory::{run_theory, TheoryParams};
use rtlrank_cli::config::{prior_from_config, ExperimentConfig};
use rtlrank_cli::error::{CliError, CliResult};

use rtlrank_core::comparators::OracleParams;
use rtlrank_core::metrics::{LogBase, MetricFamily};
use rtlrank_core::priors::{BetaScorePrior, DEFAULT_QUADRATURE_TOL};
use rtlrank_core::sim::{PipelineConfig, SweepGrid};
use rtlrank_core::strategies::{BubbleInit, StrategySpec};

const THREADS_ENV: &str = "RTLRANK_THREADS";

#[derive(Parser)]
#[command(
    name = "rtlrank",
    version,
    about = "Pointwise-initialized pairwise reranking: rerank impression files, \
             compute the transition-matrix theory, and run seeded simulations"
)]
struct Cli {
    /// Worker threads (default: RTLRANK_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rerank an impression file with one or more inference strategies.
    Rerank(RerankArgs),
    /// Transition matrix, expected metrics, gains, and condition verdicts.
    Theory(TheoryArgs),
    /// One seeded Monte Carlo run of the two-stage pipeline.
    Simulate(SimulateArgs),
    /// Grid sweep (priors x oracles x strategies) driven by a config file.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Pointwise,
    Rtl,
    Bubble,
    Box,
    Nwindow,
    Swindow,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Pointwise,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogBaseArg {
    E,
    #[value(name = "2")]
    Two,
}

impl From<LogBaseArg> for LogBase {
    fn from(arg: LogBaseArg) -> Self {
        match arg {
            LogBaseArg::E => LogBase::E,
            LogBaseArg::Two => LogBase::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Mrr,
    Dcg,
}

#[derive(Args)]
struct StrategyFlags {
    /// Strategy to run; `all` expands to the whole comparison suite.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// RTL passes m.
    #[arg(long)]
    passes: Option<u32>,
    /// RTL prefix length k.
    #[arg(long)]
    top_k: Option<usize>,
    /// Bubble-sort initialization.
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Window size w for the window strategies.
    #[arg(long)]
    window: Option<usize>,
    /// Stride s for the skip-window strategy.
    #[arg(long)]
    skip: Option<usize>,
}

impl StrategyFlags {
    const DEFAULT_PASSES: u32 = 1;
    const DEFAULT_TOP_K: usize = 5;
    const DEFAULT_WINDOW: usize = 5;
    const DEFAULT_SKIP: usize = 2;

    fn resolve(&self, config: &ExperimentConfig) -> CliResult<Option<Vec<StrategySpec>>> {
        let passes = self
            .passes
            .or(config.passes)
            .unwrap_or(Self::DEFAULT_PASSES);
        let top_k = self.top_k.or(config.top_k).unwrap_or(Self::DEFAULT_TOP_K);
        let window = self.window.unwrap_or(Self::DEFAULT_WINDOW);
        let skip = self.skip.unwrap_or(Self::DEFAULT_SKIP);
        let init = match self.init {
            Some(InitArg::Random) => BubbleInit::Random,
            _ => BubbleInit::Pointwise,
        };
        let specs = match self.strategy {
            None => {
                return Ok(config
                    .strategy
                    .map(|s| vec![s])
                    .or_else(|| config.strategies.clone()))
            }
            Some(StrategyArg::Pointwise) => vec![StrategySpec::Pointwise],
            Some(StrategyArg::Rtl) => vec![StrategySpec::Rtl { passes, top_k }],
            Some(StrategyArg::Bubble) => vec![StrategySpec::BubbleFull { init }],
            Some(StrategyArg::Box) => vec![StrategySpec::BoxFilling],
            Some(StrategyArg::Nwindow) => vec![StrategySpec::NWindow { window }],
            Some(StrategyArg::Swindow) => vec![StrategySpec::SWindow { window, skip }],
            Some(StrategyArg::All) => vec![
                StrategySpec::Pointwise,
                StrategySpec::BoxFilling,
                StrategySpec::BubbleFull {
                    init: BubbleInit::Pointwise,
                },
                StrategySpec::BubbleFull {
                    init: BubbleInit::Random,
                },
                StrategySpec::NWindow { window },
                StrategySpec::SWindow { window, skip },
                StrategySpec::Rtl { passes: 1, top_k: 3 },
                StrategySpec::Rtl { passes: 1, top_k: 5 },
                StrategySpec::Rtl { passes: 1, top_k: 10 },
                StrategySpec::Rtl { passes: 2, top_k: 5 },
            ],
        };
        Ok(Some(specs))
    }
}

#[derive(Args)]
struct RerankArgs {
    /// Line-delimited impression file.
    #[arg(long)]
    input: PathBuf,
    /// Optional experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    strategy: StrategyFlags,
    /// Bad-swap probability of the label-aware oracle comparator.
    #[arg(long, requires = "nu")]
    mu: Option<f64>,
    /// Good-swap probability of the label-aware oracle comparator.
    #[arg(long, requires = "mu")]
    nu: Option<f64>,
    /// Tie-swap probability of the oracle comparator.
    #[arg(long)]
    tie_swap: Option<f64>,
    /// Estimate (mu, nu) from the file's preference strengths and rerank with
    /// that oracle.
    #[arg(long, conflicts_with_all = ["mu", "nu"])]
    oracle_from_data: bool,
    /// Report estimated (mu, nu) in the manifest without changing the
    /// comparator.
    #[arg(long)]
    estimate_oracle: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Logarithm base of the nDCG discount.
    #[arg(long, value_enum)]
    log_base: Option<LogBaseArg>,
    /// nDCG cutoffs, comma separated.
    #[arg(long, value_delimiter = ',')]
    ndcg_cutoffs: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort on the first malformed or degenerate impression instead of
    /// skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of candidates K.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Explicit initial state distribution, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "prior")]
    pi: Option<Vec<f64>>,
    /// Beta score prior a1,b1,a2,b2 inducing the initial distribution.
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
    /// Number of RTL passes to push the distribution through.
    #[arg(long)]
    passes: Option<u32>,
    /// Additive metric family.
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[arg(long, value_enum)]
    log_base: Option<LogBaseArg>,
    /// Absolute quadrature tolerance for the prior route.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    /// Relevant items per trial.
    #[arg(long)]
    positives: Option<usize>,
    /// Beta score prior a1,b1,a2,b2.
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    tie_swap: Option<f64>,
    #[command(flatten)]
    strategy: StrategyFlags,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    ndcg_cutoffs: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    log_base: Option<LogBaseArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config with the priors/oracles/strategies grids.
    #[arg(long)]
    config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: &Option<PathBuf>) -> CliResult<ExperimentConfig> {
    match path {
        Some(path) => ExperimentConfig::load(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn prior_from_flag(values: &[f64]) -> CliResult<BetaScorePrior> {
    if values.len() != 4 {
        return Err(CliError::config(format!(
            "--prior needs a1,b1,a2,b2 (4 values), got {}",
            values.len()
        )));
    }
    Ok(BetaScorePrior::new(values[0], values[1], values[2], values[3])?)
}

fn init_thread_pool(threads: Option<usize>) -> CliResult<()> {
    let threads = match threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(value) => Some(value.parse::<usize>().map_err(|_| {
                CliError::config(format!("{THREADS_ENV} must be a positive integer, got `{value}`"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::config("thread count must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("building thread pool: {e}")))?;
    }
    Ok(())
}

fn cmd_rerank(args: RerankArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let strategies = args
        .strategy
        .resolve(&config)?
        .ok_or_else(|| CliError::config("rerank needs --strategy (or strategies in --config)"))?;
    let comparator = if args.oracle_from_data {
        ComparatorChoice::OracleFromData
    } else if let (Some(mu), Some(nu)) = (args.mu, args.nu) {
        let params = match args.tie_swap {
            Some(tie) => OracleParams::with_tie_swap(mu, nu, tie)?,
            None => OracleParams::new(mu, nu)?,
        };
        ComparatorChoice::Oracle(params)
    } else {
        ComparatorChoice::PrefTable
    };
    run_rerank(&RerankParams {
        input: args.input,
        out_dir: args.out.or(config.out).unwrap_or_else(|| PathBuf::from(".")),
        strategies,
        comparator,
        seed: args.seed.or(config.seed).unwrap_or(0),
        log_base: args
            .log_base
            .map(LogBase::from)
            .or(config.log_base)
            .unwrap_or(LogBase::Two),
        ndcg_cutoffs: args
            .ndcg_cutoffs
            .or(config.ndcg_cutoffs)
            .unwrap_or_else(|| vec![5, 10]),
        strict: args.strict,
        estimate_oracle: args.estimate_oracle,
    })
    .map(|_| ())
}

fn cmd_theory(args: TheoryArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let k = args
        .k
        .or(config.k)
        .ok_or_else(|| CliError::config("theory needs --k"))?;
    let (config_mu, config_nu) = config
        .oracle
        .map(|o| (Some(o.mu), Some(o.nu)))
        .unwrap_or((None, None));
    let mu = args
        .mu
        .or(config_mu)
        .ok_or_else(|| CliError::config("theory needs --mu"))?;
    let nu = args
        .nu
        .or(config_nu)
        .ok_or_else(|| CliError::config("theory needs --nu"))?;
    let prior = match (&args.prior, config.prior) {
        (Some(values), _) => Some(prior_from_flag(values)?),
        (None, Some(values)) if args.pi.is_none() && config.pi.is_none() => {
            Some(prior_from_config(values)?)
        }
        _ => None,
    };
    run_theory(&TheoryParams {
        k,
        mu,
        nu,
        pi: args.pi.clone().or(config.pi),
        prior,
        passes: args.passes.or(config.passes).unwrap_or(1),
        metric: match args.metric {
            Some(MetricArg::Dcg) => MetricFamily::Dcg,
            _ => MetricFamily::Mrr,
        },
        log_base: args
            .log_base
            .map(LogBase::from)
            .or(config.log_base)
            .unwrap_or(LogBase::E),
        quad_tol: args
            .tol
            .or(config.quad_tol)
            .unwrap_or(DEFAULT_QUADRATURE_TOL),
        out_dir: args.out.or(config.out).unwrap_or_else(|| PathBuf::from(".")),
    })
    .map(|_| ())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let k = args
        .k
        .or(config.k)
        .ok_or_else(|| CliError::config("simulate needs --k"))?;
    let prior = match (&args.prior, config.prior) {
        (Some(values), _) => prior_from_flag(values)?,
        (None, Some(values)) => prior_from_config(values)?,
        (None, None) => return Err(CliError::config("simulate needs --prior a1,b1,a2,b2")),
    };
    let (config_mu, config_nu, config_tie) = config
        .oracle
        .map(|o| (Some(o.mu), Some(o.nu), o.tie_swap))
        .unwrap_or((None, None, None));
    let mu = args
        .mu
        .or(config_mu)
        .ok_or_else(|| CliError::config("simulate needs --mu"))?;
    let nu = args
        .nu
        .or(config_nu)
        .ok_or_else(|| CliError::config("simulate needs --nu"))?;
    let oracle = match args.tie_swap.or(config_tie) {
        Some(tie) => OracleParams::with_tie_swap(mu, nu, tie)?,
        None => OracleParams::new(mu, nu)?,
    };
    let strategies = args
        .strategy
        .resolve(&config)?
        .ok_or_else(|| CliError::config("simulate needs --strategy"))?;
    if strategies.len() != 1 {
        return Err(CliError::config(
            "simulate runs a single strategy; use `sweep` for a grid",
        ));
    }
    run_simulate(&SimulateParams {
        config: PipelineConfig {
            k,
            positives: args.positives.or(config.positives).unwrap_or(1),
            prior,
            oracle,
            strategy: strategies[0],
            trials: args.trials.or(config.trials).unwrap_or(10_000),
            master_seed: args.seed.or(config.seed).unwrap_or(0),
            ndcg_cutoffs: args
                .ndcg_cutoffs
                .or(config.ndcg_cutoffs)
                .unwrap_or_else(|| vec![5, 10]),
            log_base: args
                .log_base
                .map(LogBase::from)
                .or(config.log_base)
                .unwrap_or(LogBase::Two),
        },
        out_dir: args.out.or(config.out).unwrap_or_else(|| PathBuf::from(".")),
    })
    .map(|_| ())
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let k = config
        .k
        .ok_or_else(|| CliError::config("sweep config needs `k`"))?;
    let priors = config
        .priors
        .as_ref()
        .ok_or_else(|| CliError::config("sweep config needs `priors`"))?
        .iter()
        .map(|&p| prior_from_config(p))
        .collect::<CliResult<Vec<_>>>()?;
    let oracles = config
        .oracles
        .as_ref()
        .ok_or_else(|| CliError::config("sweep config needs `oracles`"))?
        .iter()
        .map(|o| o.to_params())
        .collect::<CliResult<Vec<_>>>()?;
    let strategies = config
        .strategies
        .clone()
        .ok_or_else(|| CliError::config("sweep config needs `strategies`"))?;
    run_sweep(&SweepParams {
        grid: SweepGrid {
            k,
            positives: config.positives.unwrap_or(1),
            priors,
            oracles,
            strategies,
            trials: config.trials.unwrap_or(10_000),
            master_seed: config.seed.unwrap_or(0),
            ndcg_cutoffs: config.ndcg_cutoffs.clone().unwrap_or_else(|| vec![5, 10]),
            log_base: config.log_base.unwrap_or(LogBase::Two),
            quadrature_tol: config.quad_tol.unwrap_or(DEFAULT_QUADRATURE_TOL),
        },
        out_dir: args
            .out
            .or(config.out)
            .unwrap_or_else(|| PathBuf::from(".")),
    })
    .map(|_| ())
}

fn run(cli: Cli) -> CliResult<()> {
    init_thread_pool(cli.threads)?;
    match cli.command {
        Command::Rerank(args) => cmd_rerank(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
