//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p lemons --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lemons::commands::{self, analyze};
use lemons::config::parse_config;
use lemons::markov::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use lemons::sim::default_burn_in;
use lemons::stats::{binomial_pmf, expected_transactions, prob_chosen, prob_sales_given_chosen};
use lemons::{analyze_ergodicity, build_transition_matrix, stationary_distribution};
use lemons::{InitPolicy, ModelParams, SimState, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

/// The reference market: 1000 sellers and buyers, 1000 qualities, `lambda = 10`, `alpha = 0.5`.
fn figure_params(beta: f64) -> ModelParams {
    ModelParams::new(0.5, beta, 10.0, 1000, 1000, 1000).unwrap()
}

fn argmax(xs: &[f64]) -> usize {
    (0..xs.len())
        .max_by(|&i, &j| xs[i].total_cmp(&xs[j]))
        .unwrap()
        + 1
}

fn uniform_law_at_full_information() -> Outcome {
    let start = Instant::now();
    let params = figure_params(1.0);
    let t = build_transition_matrix(&params);
    let s = stationary_distribution(&t, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let err =
        s.pi.iter()
            .enumerate()
            .map(|(i, &p)| (p - if i + 1 >= 100 { 1.0 / 901.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
    check(err <= 1e-12, || {
        format!("max |pi - 1/901 on [100,1000]| = {err:.3e}")
    })?;
    check(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "max error {err:.2e}, {} iterations, {elapsed:.2?}",
        s.iterations
    ))
}

fn critical_threshold() -> Outcome {
    let (_, config) = parse_config([
        "lemons", "critical", "--alpha", "0.5", "--lambda", "10", "--kappa", "1000",
    ])
    .map_err(|e| e.to_string())?;
    let out = commands::cmd_critical(&config);
    let printed: f64 = out
        .text
        .lines()
        .find_map(|l| l.strip_prefix("critical_beta="))
        .ok_or("no critical_beta line")?
        .parse()
        .map_err(|e| format!("{e}"))?;
    check((printed - 0.315544).abs() <= 1e-6, || {
        format!("printed {printed}")
    })?;

    // the bottom state is a trap exactly on the grid points below the threshold
    let grid: Vec<f64> = (3000..=3300).map(|i| f64::from(i) * 1e-4).collect();
    let mut last_trap = None;
    let mut first_open = None;
    for &beta in &grid {
        let report = analyze_ergodicity(&build_transition_matrix(&figure_params(beta)));
        let trap = report.absorbing_states.contains(&1);
        check(trap == (beta < printed), || {
            format!("state 1 absorbing = {trap} at beta = {beta}")
        })?;
        if trap {
            last_trap = Some(beta);
        } else if first_open.is_none() {
            first_open = Some(beta);
        }
    }
    Ok(format!(
        "critical_beta = {printed:.9}; state 1 absorbing up to {:.4}, open from {:.4}",
        last_trap.unwrap_or(f64::NAN),
        first_open.unwrap_or(f64::NAN)
    ))
}

fn collapse_below_threshold() -> Outcome {
    let beta_c = figure_params(1.0).critical_beta().raw;
    let rounds = 5000;
    let run = |beta: f64| {
        let start = Instant::now();
        let mut state =
            SimState::init(&figure_params(beta), 7, &InitPolicy::UniformRandom).unwrap();
        let stats = state.run(rounds, default_burn_in(rounds)).unwrap();
        (stats, start.elapsed())
    };
    let (below, t_below) = run(beta_c - 0.01);
    check(below.collapse_flag, || {
        "no collapse at beta_c - 0.01".into()
    })?;
    check(below.dead_buyer_fraction >= 0.99, || {
        format!(
            "dead fraction {} at beta_c - 0.01",
            below.dead_buyer_fraction
        )
    })?;
    let (above, t_above) = run(beta_c + 0.01);
    let rate = above.trailing_trade_rate(1000);
    check(!above.collapse_flag && rate > 0.0, || {
        format!("trade rate {rate} at beta_c + 0.01")
    })?;
    let slowest = t_below.max(t_above);
    check(slowest < Duration::from_secs(60), || {
        format!("slowest run {slowest:?}")
    })?;
    Ok(format!(
        "below: dead fraction {:.4}; above: {rate:.1} trades/round over the last 1000; slowest {slowest:.2?}",
        below.dead_buyer_fraction
    ))
}

fn simulation_matches_analytics() -> Outcome {
    let start = Instant::now();
    let rounds = 100_000;
    let mut notes = Vec::new();
    for beta in [0.5, 0.8, 1.0] {
        let params = ModelParams::new(0.5, beta, 3.0, 50, 50, 200).unwrap();
        let analysis =
            analyze(&params, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
        let mut state = SimState::init(&params, 2024, &InitPolicy::UniformRandom).unwrap();
        let empirical = state.run(rounds, default_burn_in(rounds)).unwrap();
        let tv = common::total_variation(&empirical.empirical_pi, &analysis.stationary.pi);
        check(tv < 0.02, || format!("beta {beta}: TV {tv:.4}"))?;

        // one seller per quality; its sales in a round are Binomial(N_b, p_k / N_s)
        let r = empirical.rounds_used as f64;
        let (nb, ns) = (f64::from(params.n_buyers()), f64::from(params.n_sellers()));
        let mut worst: f64 = 0.0;
        for (i, (&emp, &p_k)) in empirical
            .transactions_per_round
            .iter()
            .zip(&analysis.observables.sale_prob)
            .enumerate()
        {
            let q = p_k / ns;
            let sigma = (nb * q * (1.0 - q) / r).sqrt();
            let dev = (emp - nb * q).abs();
            if sigma == 0.0 {
                check(dev == 0.0, || {
                    format!("beta {beta}, k {}: sales where none are possible", i + 1)
                })?;
                continue;
            }
            worst = worst.max(dev / sigma);
            check(dev <= 4.0 * sigma, || {
                format!(
                    "beta {beta}, k {}: |{emp:.5} - {:.5}| = {:.2} sigma",
                    i + 1,
                    nb * q,
                    dev / sigma
                )
            })?;
        }
        notes.push(format!("beta {beta}: TV {tv:.4}, worst {worst:.2} sigma"));
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(120), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("{}; {elapsed:.2?}", notes.join("; ")))
}

fn kernel_matches_brute_force() -> Outcome {
    let alphas = [0.25, 0.5, 1.0, 1.5, 2.0];
    let betas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let lambdas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let (mut cases, mut unique, mut worst_pi, mut worst_sum): (usize, usize, f64, f64) =
        (0, 0, 0.0, 0.0);
    for kappa in 2..=8u32 {
        for &alpha in &alphas {
            for &beta in &betas {
                for &lambda in &lambdas {
                    let params =
                        ModelParams::new(alpha, beta, lambda, kappa, kappa, kappa).unwrap();
                    let t = build_transition_matrix(&params);
                    let brute = common::brute_kernel(alpha, beta, lambda, kappa);
                    let n = kappa as usize;
                    for (row, brute_row) in brute.iter().enumerate() {
                        for (col, &expect) in brute_row.iter().enumerate() {
                            // the oracle adds 1/kappa once per seller, so allow rounding
                            check((t.entry(row, col) - expect).abs() <= 1e-14, || {
                                format!("kernel entry ({row},{col}) differs at {params:?}")
                            })?;
                        }
                    }
                    for s in t.column_sums() {
                        worst_sum = worst_sum.max((s - 1.0).abs());
                    }
                    let pi = stationary_distribution(&t, &SolverOptions::default())
                        .map_err(|e| format!("{params:?}: {e}"))?
                        .pi;
                    // the null space is one-dimensional for a single closed class;
                    // otherwise the limit depends on the uniform start
                    let oracle = match common::unique_null_vector(&brute) {
                        Some(v) => {
                            unique += 1;
                            v
                        }
                        None => common::long_run(&brute, &vec![1.0 / n as f64; n]),
                    };
                    let err = common::max_abs_diff(&pi, &oracle);
                    check(err <= 1e-10, || format!("l-inf {err:.3e} at {params:?}"))?;
                    worst_pi = worst_pi.max(err);
                    cases += 1;
                }
            }
        }
    }
    check(worst_sum <= 1e-12, || {
        format!("column sum off by {worst_sum:.3e}")
    })?;
    Ok(format!(
        "{cases} kernels ({unique} with a unique null vector): l-inf {worst_pi:.2e}, column sums {worst_sum:.2e}"
    ))
}

fn statistics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_sum: f64 = 0.0;
    // kappa = 2, beta = 0, alpha = lambda = 1: seller 2 sells exactly to buyers in state 2
    for &nb in &[1u32, 2, 3, 10, 57, 100, 200] {
        for &ns in &[2u32, 4, 10, 50, 200] {
            for _ in 0..8 {
                let p: f64 = rng.random();
                let params = ModelParams::new(1.0, 0.0, 1.0, 2, ns, nb).unwrap();
                let closed = expected_transactions(2, &[1.0 - p, p], &params);
                let visits = common::pascal_binomial(u64::from(nb), 1.0 / f64::from(ns));
                let mut double = 0.0;
                let mut double_lib = 0.0;
                for n in 0..=u64::from(nb) {
                    let sales = common::pascal_binomial(n, p);
                    let inner: f64 = (0..=n).map(|j| j as f64 * sales[j as usize]).sum();
                    double += visits[n as usize] * inner;
                    let inner_lib: f64 = (0..=n)
                        .map(|j| j as f64 * prob_sales_given_chosen(j, n, p).unwrap())
                        .sum();
                    double_lib += prob_chosen(n, &params).unwrap() * inner_lib;
                }
                let err = (closed - double).abs().max((closed - double_lib).abs());
                check(err <= 1e-10, || {
                    format!("N_b {nb}, N_s {ns}, p {p}: closed {closed} vs {double}")
                })?;
                worst_sum = worst_sum.max(err);
            }
        }
    }

    for nb in 1..=500u32 {
        for (kappa, ns) in [
            (2u32, 2u32),
            (3, 3),
            (2, 4),
            (5, 10),
            (7, 21),
            (100, 100),
            (2, 500),
        ] {
            let params = ModelParams::new(1.0, 0.0, 1.0, kappa, ns, nb).unwrap();
            let exact = ((f64::from(ns) - 1.0) / f64::from(ns)).powf(f64::from(nb));
            let got = prob_chosen(0, &params).unwrap();
            check(got == exact, || {
                format!("P(X = 0) = {got} vs {exact} at N_b {nb}, N_s {ns}")
            })?;
        }
    }

    let mut worst_norm: f64 = 0.0;
    for n in (0..=500u64).step_by(7).chain([499, 500]) {
        for ns in [2u32, 10, 100, 500] {
            let params = ModelParams::new(1.0, 0.0, 1.0, 2, ns, n.max(1) as u32).unwrap();
            let total: f64 = (0..=u64::from(params.n_buyers()))
                .map(|j| prob_chosen(j, &params).unwrap())
                .sum();
            worst_norm = worst_norm.max((total - 1.0).abs());
        }
        for p in [0.0, 1e-6, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999, 1.0] {
            let total: f64 = (0..=n).map(|j| binomial_pmf(j, n, p)).sum();
            worst_norm = worst_norm.max((total - 1.0).abs());
        }
    }
    check(worst_norm <= 1e-12, || {
        format!("normalization off by {worst_norm:.3e}")
    })?;
    Ok(format!(
        "double sum within {worst_sum:.2e}; P(X=0) exact; normalization within {worst_norm:.2e}"
    ))
}

fn qualitative_shapes() -> Outcome {
    let beta_c = figure_params(1.0).critical_beta().raw;
    let solve = |beta: f64| analyze(&figure_params(beta), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();

    // (a) mass piles up below lambda^2 = 100 as beta falls to the threshold
    let path = [1.0, 0.5, 0.35, 0.32, beta_c];
    let analyses: Vec<_> = path.iter().map(|&b| solve(b)).collect();
    let low_mass: Vec<f64> = analyses
        .iter()
        .map(|a| a.stationary.pi[..100].iter().sum())
        .collect();
    check(low_mass.windows(2).all(|w| w[0] < w[1]), || {
        format!("low-quality mass {low_mass:?}")
    })?;
    for (a, &beta) in analyses.iter().zip(&path).skip(3) {
        let peak = argmax(&a.stationary.pi);
        check(peak <= 100, || {
            format!("peak of pi at k = {peak} for beta = {beta}")
        })?;
    }

    // (b) gamma rises with quality at full information; its minimum sits at kappa at the threshold
    let full = &analyses[0].observables.avg_valuation_ratio;
    let defined: Vec<f64> = full.iter().flatten().copied().collect();
    check(
        defined.len() == 901 && defined.windows(2).all(|w| w[0] < w[1]),
        || "gamma not strictly increasing at beta = 1".into(),
    )?;
    let at_threshold = analyses[4]
        .observables
        .min_valuation_ratio()
        .ok_or("no trade at beta_c")?;
    check(at_threshold.0 == 1000, || {
        format!("argmin gamma = {} at beta_c", at_threshold.0)
    })?;

    // (c) a valley in mid-quality sales for intermediate information
    let mut valleys = Vec::new();
    for beta in [0.35, 0.4] {
        let et = solve(beta).observables.expected_transactions;
        let k = (0..et.len())
            .min_by(|&i, &j| et[i].total_cmp(&et[j]))
            .unwrap();
        check(
            k > 0 && k < et.len() - 1 && et[k] < et[0] && et[k] < et[et.len() - 1],
            || {
                format!(
                    "no interior minimum of transactions at beta = {beta} (argmin k = {})",
                    k + 1
                )
            },
        )?;
        valleys.push(format!("beta {beta}: min {:.3} at k = {}", et[k], k + 1));
    }
    Ok(format!(
        "mass below 100 {:.3} -> {:.3}; argmin gamma at beta_c = {}; {}",
        low_mass[0],
        low_mass[4],
        at_threshold.0,
        valleys.join(", ")
    ))
}

fn deterministic_output() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let out = dir.path().join(name);
        let log = out.join("trades.jsonl");
        let argv = [
            "lemons",
            "simulate",
            "--beta",
            "0.5",
            "--kappa",
            "100",
            "--sellers",
            "200",
            "--buyers",
            "300",
            "--rounds",
            "400",
            "--seed",
            "99",
            "--out",
            out.to_str().unwrap(),
            "--trade-log",
            log.to_str().unwrap(),
        ];
        let (_, config) = parse_config(argv).map_err(|e| e.to_string())?;
        commands::cmd_simulate(&config).map_err(|e| e.to_string())?;
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .map(|e| {
                let path = e.unwrap().path();
                let name = path.file_name().unwrap().to_string_lossy().into_owned();
                (name, std::fs::read(&path).unwrap())
            })
            .collect();
        files.sort();
        Ok(files)
    };
    let first = run("a")?;
    let second = run("b")?;
    check(!first.is_empty() && first == second, || {
        "outputs differ between identical runs".into()
    })?;
    let bytes: usize = first.iter().map(|f| f.1.len()).sum();
    Ok(format!("{} files, {bytes} bytes, identical", first.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "uniform stationary law at full information",
            uniform_law_at_full_information,
        ),
        ("critical information degree", critical_threshold),
        ("collapse below the threshold", collapse_below_threshold),
        ("simulation matches analytics", simulation_matches_analytics),
        ("kernel matches brute force", kernel_matches_brute_force),
        ("statistics oracles", statistics_oracles),
        ("qualitative figure shapes", qualitative_shapes),
        ("deterministic simulate output", deterministic_output),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
