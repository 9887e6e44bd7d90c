//! Compares a long agent-based run with the analytical stationary law and
//! per-quality sales.
//!
//! `cargo run --release --example simulation_vs_analytics`

use lemons::commands::{analyze, total_variation};
use lemons::markov::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use lemons::{InitPolicy, ModelParams, SimState};

fn main() -> lemons::Result<()> {
    for beta in [0.5, 0.8, 1.0] {
        let params = ModelParams::new(0.5, beta, 3.0, 50, 50, 200)?;
        let analysis = analyze(&params, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let mut sim = SimState::init(&params, 7, &InitPolicy::UniformRandom)?;
        let stats = sim.run(100_000, 10_000)?;
        let tv = total_variation(&stats.empirical_pi, &analysis.stationary.pi);
        let worst = stats
            .transactions_per_round
            .iter()
            .zip(&analysis.observables.expected_transactions)
            .map(|(e, a)| (e - a).abs())
            .fold(0.0, f64::max);
        println!("beta = {beta}: TV(empirical, analytical) = {tv:.4}, worst sales/round gap = {worst:.4}");
        for k in [5u32, 10, 25, 50] {
            let i = k as usize - 1;
            println!(
                "  k = {k:2}: pi {:.4} vs {:.4}, sales/round {:.4} vs {:.4}",
                stats.empirical_pi[i],
                analysis.stationary.pi[i],
                stats.transactions_per_round[i],
                analysis.observables.expected_transactions[i]
            );
        }
    }
    Ok(())
}
