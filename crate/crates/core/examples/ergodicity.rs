//! Class structure of small kernels: absorbing states, closed classes and
//! whether every buyer ends up frozen.
//!
//! `cargo run --release --example ergodicity`

use lemons::commands::format_states;
use lemons::{analyze_ergodicity, build_transition_matrix, limit_distribution_exact, ModelParams};

fn main() -> lemons::Result<()> {
    let market = ModelParams::new(0.5, 1.0, 3.0, 50, 50, 50)?;
    println!("critical beta {:.4}", market.critical_beta().raw);
    for beta in [0.0, 0.2, 0.4, 0.45, 0.7, 1.0] {
        let t = build_transition_matrix(&market.with_beta(beta)?);
        let r = analyze_ergodicity(&t);
        let limit = limit_distribution_exact(&t, None)?;
        let classes: Vec<String> = r
            .recurrent_classes
            .iter()
            .map(|c| format!("[{}]", format_states(c)))
            .collect();
        println!(
            "beta = {beta:.2}: closed classes {}, transient [{}], absorbing [{}], \
             ergodic {}, collapse {}, limit mass at k = 1 {:.3}",
            classes.join(" "),
            format_states(&r.transient_states),
            format_states(&r.absorbing_states),
            r.is_ergodic_on_support,
            r.predicted_collapse,
            limit[0]
        );
    }
    Ok(())
}
