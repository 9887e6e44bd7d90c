//! The information degree below which the lowest-quality state traps buyers,
//! the price range where that threshold is meaningful, and the market regime.
//!
//! `cargo run --release --example critical_information`

use lemons::ModelParams;

fn main() -> lemons::Result<()> {
    for (alpha, lambda, kappa) in [
        (0.5, 10.0, 1000),
        (0.5, 3.0, 50),
        (1.0, 0.5, 5),
        (1.5, 0.8, 100),
    ] {
        let p = ModelParams::new(alpha, 0.5, lambda, kappa, kappa, kappa)?;
        let c = p.critical_beta();
        let (lo, hi) = p.lambda_viability_interval();
        let r = p.classify_regime();
        println!("alpha = {alpha}, lambda = {lambda}, kappa = {kappa}");
        println!(
            "  critical beta {:.6} (clamped {:.6}, inside [0, 1]: {})",
            c.raw, c.clamped, c.in_unit_interval
        );
        println!("  threshold lies in [0, 1] for lambda in [{lo:.4}, {hi:.4}]");
        println!(
            "  regime {:?}, k_hat {:?}, market exists: {}, completeness at beta = 0.5: {:?}",
            r.regime, r.k_hat, r.market_exists, r.complete
        );
        let escapes = |beta: f64| {
            let q = p.with_beta(beta).unwrap();
            (2..=kappa).any(|k| q.trade_occurs(k, 1).unwrap())
        };
        if c.in_unit_interval && c.raw > 0.0 {
            println!(
                "  a buyer at quality 1 can move up: {} just below, {} at the threshold",
                escapes(c.raw - 1e-9),
                escapes(c.raw)
            );
        }
    }
    Ok(())
}
