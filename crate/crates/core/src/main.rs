use std::process::ExitCode;

use clap::Parser;
use lemons::commands::{cmd_critical, cmd_simulate, cmd_solve, cmd_sweep};
use lemons::config::{Cli, Command, RunConfig};
use lemons::output::fmt_f64;

fn run(cli: Cli) -> lemons::Result<()> {
    let config = RunConfig::from_args(cli.command.args())?;
    match cli.command {
        Command::Solve(_) => {
            let out = cmd_solve(&config)?;
            let a = &out.analysis;
            println!(
                "solved in {} iterations (residual {}); predicted_collapse={}",
                a.stationary.iterations,
                fmt_f64(a.stationary.residual),
                a.ergodicity.predicted_collapse
            );
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Simulate(_) => {
            let out = cmd_simulate(&config)?;
            let r = &out.report;
            println!(
                "tv_distance={} collapse_flag={} trailing_trade_rate={}",
                fmt_f64(r.tv_distance),
                r.empirical.collapse_flag,
                fmt_f64(r.trailing_trade_rate)
            );
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep(_) => {
            let out = cmd_sweep(&config)?;
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Critical(_) => print!("{}", cmd_critical(&config).text),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
