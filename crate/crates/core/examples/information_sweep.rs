//! Runs the sweep command from a key=value configuration and prints the rows
//! it wrote.
//!
//! `cargo run --release --example information_sweep`

use lemons::commands::cmd_sweep;
use lemons::config::RunConfig;

fn main() -> lemons::Result<()> {
    let out = std::env::temp_dir().join("lemons-sweep-example");
    let text = format!(
        "# reference market over a range of information degrees\n\
         alpha=0.5\nlambda=10\nkappa=1000\nsellers=1000\nbuyers=1000\n\
         beta-grid=0.30,0.31,0.32,0.4,0.5,0.7,0.9,1.0\nout={}\n",
        out.display()
    );
    let config = RunConfig::from_config_str(&text)?;
    let sweep = cmd_sweep(&config)?;
    println!("beta    trades/round  min<gamma>  argmin  collapse  absorbing");
    for r in &sweep.rows {
        println!(
            "{:.2}    {:12.2}  {:>10}  {:>6}  {:>8}  {:>9}",
            r.beta,
            r.total_trades_per_round,
            r.min_valuation_ratio
                .map_or("-".into(), |g| format!("{g:.3}")),
            r.argmin_valuation_ratio
                .map_or("-".into(), |k| k.to_string()),
            r.predicted_collapse,
            r.absorbing_states
        );
    }
    for f in &sweep.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
