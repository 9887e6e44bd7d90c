//! The four driver commands. Each returns its in-memory result as well as
//! writing files, so the examples and tests can inspect what the CLI emits.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{InitSpec, OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::markov::{
    analyze_ergodicity, build_transition_matrix, stationary_distribution, ErgodicityReport,
    SolverOptions, StationaryDistribution,
};
use crate::model::{CriticalBeta, ModelParams, Quality, RegimeReport};
use crate::output::{self, fmt_f64, fmt_opt, JsonLines};
use crate::sim::{EmpiricalStats, InitPolicy, SimState};
use crate::stats::MarketObservables;

/// Rounds at the end of a simulation used for the trailing trade rate.
pub const TRAILING_WINDOW: usize = 1000;

/// Everything the analytical path knows about one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub params: ModelParams,
    pub critical: CriticalBeta,
    pub regime: RegimeReport,
    pub stationary: StationaryDistribution,
    pub converged: bool,
    pub ergodicity: ErgodicityReport,
    pub observables: MarketObservables,
}

/// Builds the kernel, solves it and derives the observables. A solve that
/// hits the iteration limit keeps its last iterate with `converged = false`.
pub fn analyze(params: &ModelParams, tol: f64, max_iter: u64) -> Result<Analysis> {
    let t = build_transition_matrix(params);
    let opts = SolverOptions {
        tol,
        max_iter,
        init: None,
    };
    let (stationary, converged) = match stationary_distribution(&t, &opts) {
        Ok(s) => (s, true),
        Err(Error::IterationLimit {
            iterations,
            residual,
            last,
        }) => (
            StationaryDistribution {
                pi: last,
                residual,
                iterations,
            },
            false,
        ),
        Err(e) => return Err(e),
    };
    let observables = MarketObservables::compute(&stationary.pi, params);
    Ok(Analysis {
        params: params.clone(),
        critical: params.critical_beta(),
        regime: params.classify_regime(),
        ergodicity: analyze_ergodicity(&t),
        stationary,
        converged,
        observables,
    })
}

/// Compact list of states: runs collapse to `a-b`, separated by spaces.
pub fn format_states(states: &[Quality]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let start = states[i];
        let mut end = start;
        while i + 1 < states.len() && states[i + 1] == end + 1 {
            i += 1;
            end = states[i];
        }
        parts.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
        i += 1;
    }
    parts.join(" ")
}

type Column = fn(&MarketObservables, usize) -> String;

fn figure_rows(analyses: &[Analysis], column: Column) -> impl Iterator<Item = Vec<String>> + '_ {
    analyses.iter().flat_map(move |a| {
        (0..a.observables.kappa()).map(move |i| {
            vec![
                fmt_f64(a.params.beta()),
                (i + 1).to_string(),
                column(&a.observables, i),
            ]
        })
    })
}

fn write_figures(config: &RunConfig, analyses: &[Analysis]) -> Result<Vec<PathBuf>> {
    let specs: [(&str, &str, Column); 4] = [
        ("fig1.csv", "pi", |o, i| fmt_f64(o.pi[i])),
        ("fig2.csv", "expected_transactions", |o, i| {
            fmt_f64(o.expected_transactions[i])
        }),
        ("fig3.csv", "avg_valuation_ratio", |o, i| {
            fmt_opt(o.avg_valuation_ratio[i])
        }),
        ("fig4.csv", "avg_observed_quality", |o, i| {
            fmt_opt(o.avg_observed_quality[i])
        }),
    ];
    let mut written = Vec::new();
    for (name, label, column) in specs {
        let path = config.out_path(name);
        output::write_csv(&path, &["beta", "k", label], figure_rows(analyses, column))?;
        written.push(path);
    }
    Ok(written)
}

fn write_key_values(path: &std::path::Path, pairs: &[(&str, String)]) -> Result<()> {
    output::write_csv(
        path,
        &["key", "value"],
        pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
    )
}

fn analysis_summary(a: &Analysis) -> Vec<(&'static str, String)> {
    vec![
        ("beta", fmt_f64(a.params.beta())),
        ("lambda", fmt_f64(a.params.lambda())),
        ("alpha", fmt_f64(a.params.alpha())),
        ("kappa", a.params.kappa().to_string()),
        ("critical_beta", fmt_f64(a.critical.raw)),
        ("regime", format!("{:?}", a.regime.regime)),
        ("k_hat", fmt_opt(a.regime.k_hat)),
        ("market_exists", a.regime.market_exists.to_string()),
        ("complete", format!("{:?}", a.regime.complete)),
        ("converged", a.converged.to_string()),
        ("residual", fmt_f64(a.stationary.residual)),
        ("iterations", a.stationary.iterations.to_string()),
        (
            "absorbing_states",
            format_states(&a.ergodicity.absorbing_states),
        ),
        (
            "recurrent_class_count",
            a.ergodicity.recurrent_classes.len().to_string(),
        ),
        (
            "recurrent_classes",
            a.ergodicity
                .recurrent_classes
                .iter()
                .map(|c| format_states(c))
                .collect::<Vec<_>>()
                .join(";"),
        ),
        (
            "is_ergodic_on_support",
            a.ergodicity.is_ergodic_on_support.to_string(),
        ),
        (
            "predicted_collapse",
            a.ergodicity.predicted_collapse.to_string(),
        ),
        (
            "total_trades_per_round",
            fmt_f64(a.observables.total_trades_per_round(&a.params)),
        ),
    ]
}

#[derive(Debug)]
pub struct SolveOutput {
    pub analysis: Analysis,
    pub files: Vec<PathBuf>,
}

/// Writes the stationary law, class structure and the four figure curves.
/// Non-convergence still writes everything, then reports the error.
pub fn cmd_solve(config: &RunConfig) -> Result<SolveOutput> {
    let analysis = analyze(&config.model, config.tol, config.max_iter)?;
    output::ensure_dir(config.out_dir())?;
    let mut files = Vec::new();
    match config.format {
        OutputFormat::Csv => {
            files.extend(write_figures(config, std::slice::from_ref(&analysis))?);
            let o = &analysis.observables;
            let path = config.out_path("observables.csv");
            output::write_csv(
                &path,
                &[
                    "k",
                    "p_k",
                    "expected_transactions",
                    "avg_observed_quality",
                    "avg_valuation_ratio",
                ],
                (0..o.kappa()).map(|i| {
                    vec![
                        (i + 1).to_string(),
                        fmt_f64(o.sale_prob[i]),
                        fmt_f64(o.expected_transactions[i]),
                        fmt_opt(o.avg_observed_quality[i]),
                        fmt_opt(o.avg_valuation_ratio[i]),
                    ]
                }),
            )?;
            files.push(path);
            let path = config.out_path("summary.csv");
            write_key_values(&path, &analysis_summary(&analysis))?;
            files.push(path);
        }
        OutputFormat::Json => {
            let path = config.out_path("solve.json");
            output::write_json(&path, &analysis)?;
            files.push(path);
        }
    }
    if config.export_matrix {
        let path = config.out_path("transition.csv");
        output::write_transition_matrix(&path, &build_transition_matrix(&config.model))?;
        files.push(path);
    }
    if !analysis.converged {
        return Err(Error::IterationLimit {
            iterations: analysis.stationary.iterations,
            residual: analysis.stationary.residual,
            last: analysis.stationary.pi.clone(),
        });
    }
    Ok(SolveOutput { analysis, files })
}

/// `0.5 * sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub rounds: u64,
    pub burn_in: u64,
    pub tv_distance: f64,
    pub trailing_trade_rate: f64,
    pub empirical: EmpiricalStats,
    pub analytical: Analysis,
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub report: SimulationReport,
    pub files: Vec<PathBuf>,
}

fn init_policy(config: &RunConfig, analysis: &Analysis) -> InitPolicy {
    match config.init {
        InitSpec::Uniform => InitPolicy::UniformRandom,
        InitSpec::Point(k) => InitPolicy::AllAtQuality(k),
        InitSpec::Stationary => InitPolicy::Stationary(analysis.stationary.pi.clone()),
    }
}

fn simulate(
    config: &RunConfig,
    params: &ModelParams,
    analysis: Analysis,
) -> Result<SimulationReport> {
    let mut state = SimState::init(params, config.seed, &init_policy(config, &analysis))?;
    let empirical = match &config.trade_log {
        None => state.run(config.rounds, config.burn_in)?,
        Some(path) => {
            #[derive(Serialize)]
            struct LogLine {
                round: u64,
                buyer: u32,
                seller_quality: Quality,
                k_a: Quality,
                q: f64,
                traded: bool,
            }
            let mut log = JsonLines::create(path)?;
            let mut failure = None;
            let stats = state.run_with(config.rounds, config.burn_in, |record| {
                if failure.is_some() {
                    return;
                }
                for a in &record.attempts {
                    let line = LogLine {
                        round: record.round,
                        buyer: a.buyer,
                        seller_quality: a.seller_quality,
                        k_a: a.prior_state,
                        q: a.perceived,
                        traded: a.traded,
                    };
                    if let Err(e) = log.write(&line) {
                        failure = Some(e);
                        return;
                    }
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            log.finish()?;
            stats
        }
    };
    Ok(SimulationReport {
        seed: config.seed,
        rounds: config.rounds,
        burn_in: config.burn_in,
        tv_distance: total_variation(&empirical.empirical_pi, &analysis.stationary.pi),
        trailing_trade_rate: empirical.trailing_trade_rate(TRAILING_WINDOW),
        empirical,
        analytical: analysis,
    })
}

/// Runs the agent-based market and writes it next to the analytical curves.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateOutput> {
    let analysis = analyze(&config.model, config.tol, config.max_iter)?;
    output::ensure_dir(config.out_dir())?;
    if let Some(parent) = config.trade_log.as_ref().and_then(|p| p.parent()) {
        if !parent.as_os_str().is_empty() {
            output::ensure_dir(parent)?;
        }
    }
    let report = simulate(config, &config.model, analysis)?;
    let mut files = Vec::new();
    match config.format {
        OutputFormat::Csv => {
            let e = &report.empirical;
            let a = &report.analytical.observables;
            let path = config.out_path("simulate.csv");
            output::write_csv(
                &path,
                &[
                    "k",
                    "empirical_pi",
                    "analytical_pi",
                    "pi_deviation",
                    "empirical_transactions",
                    "analytical_transactions",
                    "transactions_deviation",
                    "empirical_observed_quality",
                    "analytical_observed_quality",
                    "empirical_valuation_ratio",
                    "analytical_valuation_ratio",
                ],
                (0..a.kappa()).map(|i| {
                    vec![
                        (i + 1).to_string(),
                        fmt_f64(e.empirical_pi[i]),
                        fmt_f64(a.pi[i]),
                        fmt_f64(e.empirical_pi[i] - a.pi[i]),
                        fmt_f64(e.transactions_per_round[i]),
                        fmt_f64(a.expected_transactions[i]),
                        fmt_f64(e.transactions_per_round[i] - a.expected_transactions[i]),
                        fmt_opt(e.avg_observed_quality[i]),
                        fmt_opt(a.avg_observed_quality[i]),
                        fmt_opt(e.avg_valuation_ratio[i]),
                        fmt_opt(a.avg_valuation_ratio[i]),
                    ]
                }),
            )?;
            files.push(path);
            let path = config.out_path("trajectory.csv");
            output::write_csv(
                &path,
                &["round", "trades"],
                e.trades_by_round
                    .iter()
                    .enumerate()
                    .map(|(t, n)| vec![(t + 1).to_string(), n.to_string()]),
            )?;
            files.push(path);
            let path = config.out_path("summary.csv");
            let mut pairs = vec![
                ("seed", report.seed.to_string()),
                ("rounds", report.rounds.to_string()),
                ("burn_in", report.burn_in.to_string()),
                ("tv_distance", fmt_f64(report.tv_distance)),
                ("collapse_flag", e.collapse_flag.to_string()),
                ("dead_buyer_fraction", fmt_f64(e.dead_buyer_fraction)),
                ("trailing_trade_rate", fmt_f64(report.trailing_trade_rate)),
            ];
            pairs.extend(analysis_summary(&report.analytical));
            write_key_values(&path, &pairs)?;
            files.push(path);
        }
        OutputFormat::Json => {
            let path = config.out_path("simulate.json");
            output::write_json(&path, &report)?;
            files.push(path);
        }
    }
    if let Some(path) = &config.trade_log {
        files.push(path.clone());
    }
    Ok(SimulateOutput { report, files })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub total_trades_per_round: f64,
    pub min_valuation_ratio: Option<f64>,
    pub argmin_valuation_ratio: Option<Quality>,
    pub predicted_collapse: bool,
    pub absorbing_states: usize,
    pub converged: bool,
    pub sim_trades_per_round: Option<f64>,
    pub sim_collapse: Option<bool>,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub analyses: Vec<Analysis>,
    pub files: Vec<PathBuf>,
}

/// Evaluates every grid point concurrently; rows come back sorted by beta.
pub fn cmd_sweep(config: &RunConfig) -> Result<SweepOutput> {
    if config.beta_grid.is_empty() {
        return Err(Error::parse("beta-grid", "empty grid"));
    }
    let mut points: Vec<(SweepRow, Analysis)> = config
        .beta_grid
        .par_iter()
        .map(|&beta| -> Result<(SweepRow, Analysis)> {
            let params = config.model.with_beta(beta)?;
            let analysis = analyze(&params, config.tol, config.max_iter)?;
            let min = analysis.observables.min_valuation_ratio();
            let (sim_trades, sim_collapse) = if config.with_sim {
                let report = simulate(config, &params, analysis.clone())?;
                let used = &report.empirical.trades_by_round[report.burn_in as usize..];
                let mean = used.iter().sum::<u64>() as f64 / used.len() as f64;
                (Some(mean), Some(report.empirical.collapse_flag))
            } else {
                (None, None)
            };
            let row = SweepRow {
                beta,
                total_trades_per_round: analysis.observables.total_trades_per_round(&params),
                min_valuation_ratio: min.map(|m| m.1),
                argmin_valuation_ratio: min.map(|m| m.0),
                predicted_collapse: analysis.ergodicity.predicted_collapse,
                absorbing_states: analysis.ergodicity.absorbing_states.len(),
                converged: analysis.converged,
                sim_trades_per_round: sim_trades,
                sim_collapse,
            };
            Ok((row, analysis))
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.0.beta.total_cmp(&b.0.beta));
    let (rows, analyses): (Vec<_>, Vec<_>) = points.into_iter().unzip();

    output::ensure_dir(config.out_dir())?;
    let mut files = Vec::new();
    match config.format {
        OutputFormat::Csv => {
            let path = config.out_path("sweep.csv");
            output::write_csv(
                &path,
                &[
                    "beta",
                    "total_trades_per_round",
                    "min_valuation_ratio",
                    "argmin_valuation_ratio",
                    "predicted_collapse",
                    "absorbing_states",
                    "converged",
                    "sim_trades_per_round",
                    "sim_collapse",
                ],
                rows.iter().map(|r| {
                    vec![
                        fmt_f64(r.beta),
                        fmt_f64(r.total_trades_per_round),
                        fmt_opt(r.min_valuation_ratio),
                        r.argmin_valuation_ratio
                            .map(|k| k.to_string())
                            .unwrap_or_default(),
                        r.predicted_collapse.to_string(),
                        r.absorbing_states.to_string(),
                        r.converged.to_string(),
                        fmt_opt(r.sim_trades_per_round),
                        r.sim_collapse.map(|c| c.to_string()).unwrap_or_default(),
                    ]
                }),
            )?;
            files.push(path);
            files.extend(write_figures(config, &analyses)?);
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Payload<'a> {
                rows: &'a [SweepRow],
                curves: Vec<(f64, &'a MarketObservables)>,
            }
            let path = config.out_path("sweep.json");
            output::write_json(
                &path,
                &Payload {
                    rows: &rows,
                    curves: analyses
                        .iter()
                        .map(|a| (a.params.beta(), &a.observables))
                        .collect(),
                },
            )?;
            files.push(path);
        }
    }
    Ok(SweepOutput {
        rows,
        analyses,
        files,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalOutput {
    pub critical: CriticalBeta,
    pub lambda_interval: (f64, f64),
    pub text: String,
}

/// Critical degree (raw and clamped) and the lambda range where it lies in `[0, 1]`.
pub fn cmd_critical(config: &RunConfig) -> CriticalOutput {
    let critical = config.model.critical_beta();
    let lambda_interval = config.model.lambda_viability_interval();
    let text = format!(
        "critical_beta={}\ncritical_beta_clamped={}\ncritical_beta_in_unit_interval={}\nlambda_interval_low={}\nlambda_interval_high={}\n",
        fmt_f64(critical.raw),
        fmt_f64(critical.clamped),
        critical.in_unit_interval,
        fmt_f64(lambda_interval.0),
        fmt_f64(lambda_interval.1),
    );
    CriticalOutput {
        critical,
        lambda_interval,
        text,
    }
}
