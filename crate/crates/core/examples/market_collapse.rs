//! Agent-based runs on either side of the critical information degree.
//!
//! `cargo run --release --example market_collapse`

use lemons::{InitPolicy, ModelParams, SimState};

fn main() -> lemons::Result<()> {
    let market = ModelParams::new(0.5, 1.0, 10.0, 1000, 1000, 1000)?;
    let beta_c = market.critical_beta().raw;
    for beta in [beta_c - 0.01, beta_c + 0.01, 0.5] {
        let mut sim = SimState::init(&market.with_beta(beta)?, 42, &InitPolicy::UniformRandom)?;
        let stats = sim.run(5000, 500)?;
        let checkpoints: Vec<String> = [0, 100, 500, 1000, 2000, 4999]
            .iter()
            .map(|&t| format!("{}:{}", t + 1, stats.trades_by_round[t]))
            .collect();
        println!("beta = {beta:.4}");
        println!("  trades per round at {}", checkpoints.join("  "));
        println!(
            "  collapsed: {}, buyers unable to trade: {:.1}%, trades/round over the last 1000: {:.1}",
            stats.collapse_flag,
            100.0 * stats.dead_buyer_fraction,
            stats.trailing_trade_rate(1000)
        );
    }
    Ok(())
}
