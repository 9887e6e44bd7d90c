//! Per-quality sale probability, expected sales, mean perceived quality and
//! mean valuation ratio from the stationary law.
//!
//! `cargo run --release --example market_observables`

use lemons::{
    build_transition_matrix, stationary_distribution, MarketObservables, ModelParams, SolverOptions,
};

fn main() -> lemons::Result<()> {
    let market = ModelParams::new(0.5, 1.0, 10.0, 1000, 1000, 1000)?;
    for beta in [1.0, 0.6, 0.4, 0.32] {
        let params = market.with_beta(beta)?;
        let pi =
            stationary_distribution(&build_transition_matrix(&params), &SolverOptions::default())?
                .pi;
        let obs = MarketObservables::compute(&pi, &params);
        println!(
            "beta = {beta}: {:.1} trades per round",
            obs.total_trades_per_round(&params)
        );
        if let Some((k, gamma)) = obs.min_valuation_ratio() {
            println!("  lowest mean valuation ratio {gamma:.3} at k = {k}");
        }
        for k in [10usize, 100, 250, 500, 750, 1000] {
            let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
            println!(
                "  k = {k:4}: p_k {:.3}, sales/round {:.3}, <q> {}, <gamma> {}",
                obs.sale_prob[k - 1],
                obs.expected_transactions[k - 1],
                show(obs.avg_observed_quality[k - 1]),
                show(obs.avg_valuation_ratio[k - 1])
            );
        }
    }
    Ok(())
}
