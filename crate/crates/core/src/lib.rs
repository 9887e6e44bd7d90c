//! Markovian market with asymmetric information.
//!
//! Buyers judge an offered good by blending its advertised quality with the
//! quality of the last good they bought. Sellers price by a power law in
//! quality. The buyer state is therefore a Markov chain on `1..=kappa`, and
//! once the information degree `beta` drops below a critical value the
//! lowest-quality state becomes a trap and the market dies.
//!
//! - [`model`]: parameters, valuations, the trade rule, regimes and the critical degree.
//! - [`markov`]: the transition kernel, its stationary law and its class structure.
//! - [`stats`]: per-quality sale probabilities, transaction counts and conditional averages.
//! - [`sim`]: the agent-based market, run round by round from a seed.
//! - [`config`], [`output`], [`commands`]: the `lemons` command-line driver.

pub mod commands;
pub mod config;
pub mod error;
pub mod markov;
pub mod model;
pub mod output;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use markov::{
    analyze_ergodicity, build_transition_matrix, limit_distribution_exact, stationary_distribution,
    ErgodicityReport, SolverOptions, StationaryDistribution, TransitionMatrix,
};
pub use model::{Completeness, CriticalBeta, ModelParams, Quality, Regime, RegimeReport};
pub use sim::{EmpiricalStats, InitPolicy, RoundRecord, SimState};
pub use stats::MarketObservables;
