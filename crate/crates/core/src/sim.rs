//! Agent-based realization of the market.
//!
//! Every round each buyer draws one seller uniformly from the roster and
//! buys iff the trade rule accepts; a refused buyer waits for the next
//! round. A buyer's update depends only on its own state and draw, so the
//! round is equivalent to evaluating everyone against the pre-round
//! snapshot. Each buyer owns a ChaCha8 stream (stream id = buyer index)
//! derived from the run seed, which makes trajectories independent of the
//! order buyers are visited in.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Quality};

/// Trailing rounds inspected by [`SimState::detect_collapse`] at the end of a run.
pub const DEFAULT_COLLAPSE_WINDOW: usize = 100;

const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum InitPolicy {
    UniformRandom,
    AllAtQuality(Quality),
    /// Draw each buyer independently from this law over `1..=kappa`.
    Stationary(Vec<f64>),
}

/// One buyer's attempt in a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Attempt {
    pub buyer: u32,
    /// Index into the seller roster.
    pub seller: u32,
    pub seller_quality: Quality,
    pub prior_state: Quality,
    pub perceived: f64,
    pub traded: bool,
}

#[derive(Debug, Clone)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: u64,
    pub transactions_per_seller: Vec<u32>,
    pub trades_total: u64,
    pub attempts: Vec<Attempt>,
}

impl RoundRecord {
    pub fn trades(&self) -> impl Iterator<Item = &Attempt> {
        self.attempts.iter().filter(|a| a.traded)
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    params: ModelParams,
    buyer_states: Vec<Quality>,
    seller_qualities: Vec<Quality>,
    round: u64,
    seed: u64,
    buyer_rngs: Vec<ChaCha8Rng>,
    trade_history: Vec<u64>,
    dead: Vec<bool>,
}

impl SimState {
    pub fn init(params: &ModelParams, seed: u64, policy: &InitPolicy) -> Result<Self> {
        let kappa = params.kappa();
        if !params.n_sellers().is_multiple_of(kappa) {
            return Err(Error::Configuration(
                "sellers must be a multiple of kappa".into(),
            ));
        }
        let per_quality = params.sellers_per_quality();
        let seller_qualities: Vec<Quality> = (1..=kappa)
            .flat_map(|k| std::iter::repeat_n(k, per_quality as usize))
            .collect();

        let base = ChaCha8Rng::seed_from_u64(seed);
        let mut init_rng = base.clone();
        init_rng.set_stream(INIT_STREAM);
        let n_buyers = params.n_buyers() as usize;
        let buyer_states = match policy {
            InitPolicy::AllAtQuality(k0) => {
                if *k0 == 0 || *k0 > kappa {
                    return Err(Error::domain("init", k0, "quality must lie in 1..=kappa"));
                }
                vec![*k0; n_buyers]
            }
            InitPolicy::UniformRandom => (0..n_buyers)
                .map(|_| init_rng.random_range(1..=kappa))
                .collect(),
            InitPolicy::Stationary(pi) => {
                if pi.len() != kappa as usize {
                    return Err(Error::Configuration(format!(
                        "stationary init has length {}, expected {kappa}",
                        pi.len()
                    )));
                }
                let dist = WeightedIndex::new(pi)
                    .map_err(|e| Error::Configuration(format!("stationary init: {e}")))?;
                (0..n_buyers)
                    .map(|_| dist.sample(&mut init_rng) as Quality + 1)
                    .collect()
            }
        };
        let buyer_rngs = (0..n_buyers as u64)
            .map(|i| {
                let mut rng = base.clone();
                rng.set_stream(i);
                rng
            })
            .collect();
        let dead = (1..=kappa).map(|k| params.is_dead_state(k)).collect();

        Ok(Self {
            params: params.clone(),
            buyer_states,
            seller_qualities,
            round: 0,
            seed,
            buyer_rngs,
            trade_history: Vec::new(),
            dead,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn buyer_states(&self) -> &[Quality] {
        &self.buyer_states
    }
    pub fn seller_qualities(&self) -> &[Quality] {
        &self.seller_qualities
    }
    /// Rounds played since `init`.
    pub fn round(&self) -> u64 {
        self.round
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    /// Trades per round for every round played so far.
    pub fn trade_history(&self) -> &[u64] {
        &self.trade_history
    }

    /// Histogram of buyer states, indexed by quality - 1.
    pub fn state_histogram(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.params.kappa() as usize];
        for &s in &self.buyer_states {
            counts[s as usize - 1] += 1;
        }
        counts
    }

    /// Share of buyers sitting in states from which no offer is ever accepted.
    pub fn dead_buyer_fraction(&self) -> f64 {
        let dead = self
            .buyer_states
            .iter()
            .filter(|&&s| self.dead[s as usize - 1])
            .count();
        dead as f64 / self.buyer_states.len() as f64
    }

    fn play_round(&mut self, mut on_attempt: impl FnMut(Attempt)) -> u64 {
        let n_sellers = self.seller_qualities.len() as u32;
        let mut trades = 0u64;
        for (buyer, (state, rng)) in self
            .buyer_states
            .iter_mut()
            .zip(self.buyer_rngs.iter_mut())
            .enumerate()
        {
            let seller = rng.random_range(0..n_sellers);
            let k = self.seller_qualities[seller as usize];
            let prior = *state;
            let traded = self.params.trades_unchecked(k, prior);
            if traded {
                *state = k;
                trades += 1;
            }
            on_attempt(Attempt {
                buyer: buyer as u32,
                seller,
                seller_quality: k,
                prior_state: prior,
                perceived: self.params.perceived_unchecked(k, prior),
                traded,
            });
        }
        self.round += 1;
        self.trade_history.push(trades);
        trades
    }

    /// Plays one round and returns everything that happened in it.
    pub fn step(&mut self) -> RoundRecord {
        let mut per_seller = vec![0u32; self.seller_qualities.len()];
        let mut attempts = Vec::with_capacity(self.buyer_states.len());
        let trades_total = self.play_round(|a| {
            if a.traded {
                per_seller[a.seller as usize] += 1;
            }
            attempts.push(a);
        });
        debug_assert!(attempts.iter().filter(|a| a.traded).all(|a| self
            .params
            .trades_unchecked(a.seller_quality, a.prior_state)));
        RoundRecord {
            round: self.round,
            transactions_per_seller: per_seller,
            trades_total,
            attempts,
        }
    }

    /// Plays `rounds` rounds and time-averages the last `rounds - burn_in`.
    pub fn run(&mut self, rounds: u64, burn_in: u64) -> Result<EmpiricalStats> {
        self.run_with(rounds, burn_in, |_| {})
    }

    /// [`Self::run`], handing every round's record to `observe` as it happens.
    pub fn run_with(
        &mut self,
        rounds: u64,
        burn_in: u64,
        mut observe: impl FnMut(&RoundRecord),
    ) -> Result<EmpiricalStats> {
        if rounds <= burn_in {
            return Err(Error::Configuration(format!(
                "rounds ({rounds}) must exceed burn-in ({burn_in})"
            )));
        }
        let kappa = self.params.kappa() as usize;
        let mut occupancy = vec![0u64; kappa];
        let mut sales = vec![0u64; kappa];
        let mut quality_sum = vec![0.0f64; kappa];
        let mut ratio_sum = vec![0.0f64; kappa];
        let mut trades_by_round = Vec::with_capacity(rounds as usize);

        for t in 0..rounds {
            let record = self.step();
            observe(&record);
            trades_by_round.push(record.trades_total);
            if t < burn_in {
                continue;
            }
            for trade in record.trades() {
                let i = trade.seller_quality as usize - 1;
                sales[i] += 1;
                quality_sum[i] += trade.perceived;
                ratio_sum[i] += self
                    .params
                    .valuation_ratio(trade.seller_quality, trade.perceived);
            }
            for &s in &self.buyer_states {
                occupancy[s as usize - 1] += 1;
            }
        }

        let rounds_used = rounds - burn_in;
        let samples = (rounds_used * u64::from(self.params.n_buyers())) as f64;
        let seller_rounds = (rounds_used * u64::from(self.params.sellers_per_quality())) as f64;
        let mean = |sum: &[f64]| -> Vec<Option<f64>> {
            sum.iter()
                .zip(&sales)
                .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
                .collect()
        };
        Ok(EmpiricalStats {
            empirical_pi: occupancy.iter().map(|&c| c as f64 / samples).collect(),
            transactions_per_round: sales.iter().map(|&n| n as f64 / seller_rounds).collect(),
            avg_observed_quality: mean(&quality_sum),
            avg_valuation_ratio: mean(&ratio_sum),
            trades_by_round,
            collapse_flag: self.detect_collapse(DEFAULT_COLLAPSE_WINDOW),
            dead_buyer_fraction: self.dead_buyer_fraction(),
            rounds_used,
            burn_in,
        })
    }

    /// No trade over the trailing `window` rounds (or as many as were played),
    /// or every buyer stuck at quality 1 with quality 1 unable to trade.
    pub fn detect_collapse(&self, window: usize) -> bool {
        assert!(window >= 1, "collapse window must be at least one round");
        let all_at_bottom = self.buyer_states.iter().all(|&s| s == 1) && self.dead[0];
        if all_at_bottom {
            return true;
        }
        if self.trade_history.is_empty() {
            return false;
        }
        let start = self.trade_history.len().saturating_sub(window);
        self.trade_history[start..].iter().all(|&t| t == 0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalStats {
    /// Time-averaged buyer-state histogram after burn-in, indexed by quality - 1.
    pub empirical_pi: Vec<f64>,
    /// Mean sales per round of one seller of each quality.
    pub transactions_per_round: Vec<f64>,
    /// Mean perceived quality over trades with each quality; `None` if it never sold.
    pub avg_observed_quality: Vec<Option<f64>>,
    pub avg_valuation_ratio: Vec<Option<f64>>,
    /// Trades per round over the whole run, burn-in included.
    pub trades_by_round: Vec<u64>,
    pub collapse_flag: bool,
    pub dead_buyer_fraction: f64,
    pub rounds_used: u64,
    pub burn_in: u64,
}

impl EmpiricalStats {
    /// Mean trades per round over the last `window` rounds of the run.
    pub fn trailing_trade_rate(&self, window: usize) -> f64 {
        let n = window.min(self.trades_by_round.len()).max(1);
        let tail = &self.trades_by_round[self.trades_by_round.len() - n..];
        tail.iter().sum::<u64>() as f64 / n as f64
    }
}

/// Default burn-in: a tenth of the run.
pub fn default_burn_in(rounds: u64) -> u64 {
    rounds / 10
}
