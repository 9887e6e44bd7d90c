//! Steps a tiny market by hand and prints every attempt.
//!
//! `cargo run --release --example trade_log`

use lemons::{InitPolicy, ModelParams, SimState};

fn main() -> lemons::Result<()> {
    let params = ModelParams::new(0.5, 0.6, 1.5, 5, 10, 4)?;
    let mut sim = SimState::init(&params, 3, &InitPolicy::UniformRandom)?;
    println!("sellers by quality: {:?}", sim.seller_qualities());
    println!("buyers start at:    {:?}", sim.buyer_states());
    for _ in 0..4 {
        let record = sim.step();
        println!("round {} ({} trades)", record.round, record.trades_total);
        for a in &record.attempts {
            println!(
                "  buyer {} (state {}) meets seller {} of quality {}: perceived {:.2} vs price {:.2} -> {}",
                a.buyer,
                a.prior_state,
                a.seller,
                a.seller_quality,
                a.perceived,
                params.seller_valuation(a.seller_quality)? / params.a(),
                if a.traded { "buys" } else { "walks away" }
            );
        }
    }
    println!("buyers end at:      {:?}", sim.buyer_states());
    Ok(())
}
