//! Long-run distribution of buyer states at full and at degraded information.
//!
//! `cargo run --release --example stationary_distribution`

use lemons::{build_transition_matrix, stationary_distribution, ModelParams, SolverOptions};

fn main() -> lemons::Result<()> {
    let market = ModelParams::new(0.5, 1.0, 10.0, 1000, 1000, 1000)?;
    for beta in [1.0, 0.5, 0.35, 0.32] {
        let params = market.with_beta(beta)?;
        let t = build_transition_matrix(&params);
        let s = stationary_distribution(&t, &SolverOptions::default())?;
        // power iteration leaves round-off sized mass off the support
        let support = s.pi.iter().filter(|&&p| p > 1e-12).count();
        let low: f64 = s.pi[..99].iter().sum();
        let peak = (1..=1000)
            .max_by(|&a, &b| s.mass(a).total_cmp(&s.mass(b)))
            .unwrap();
        println!(
            "beta = {beta:.2}: {} iterations, residual {:.1e}, {support} states charged, \
             mass below k = 100 {low:.3}, peak at k = {peak} ({:.2e})",
            s.iterations,
            s.residual,
            s.mass(peak)
        );
    }
    Ok(())
}
