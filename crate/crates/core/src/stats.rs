//! Per-quality observables of the stationary market.
//!
//! A seller of quality `k` is visited by `X_k ~ Binomial(N_b, 1/N_s)` buyers
//! per round and sells to each independently with probability `p_k`, the
//! stationary mass of buyer states that accept `k`. Conditional averages are
//! taken over the buyer states that do business with `k`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Quality};

fn check_pi(pi: &[f64], params: &ModelParams) {
    assert_eq!(
        pi.len(),
        params.kappa() as usize,
        "distribution length must equal kappa"
    );
}

/// `ln C(n, k)` as `sum_{i=1..k} ln((n - k + i) / i)` over the smaller side.
///
/// Each term is O(ln n), so the result stays accurate to ~1e-14 where a
/// difference of log-factorials near `ln(1000!) ~ 5900` would lose ~1e-12.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    let k = k.min(n - k);
    let rest = (n - k) as f64;
    (1..=k).fold(0.0, |acc, i| acc + (rest / i as f64).ln_1p())
}

/// Binomial mass `C(n, j) p^j (1-p)^(n-j)`, evaluated in log space.
///
/// The two edges `j = 0` and `j = n` are plain powers.
pub fn binomial_pmf(j: u64, n: u64, p: f64) -> f64 {
    if j > n {
        return 0.0;
    }
    if p <= 0.0 {
        return f64::from(u8::from(j == 0));
    }
    if p >= 1.0 {
        return f64::from(u8::from(j == n));
    }
    if j == 0 {
        return (1.0 - p).powf(n as f64);
    }
    if j == n {
        return p.powf(n as f64);
    }
    let ln = ln_choose(n, j) + j as f64 * p.ln() + (n - j) as f64 * (-p).ln_1p();
    ln.exp()
}

/// `P(X_k = n)`: exactly `n` of the `N_b` buyers pick a given seller.
pub fn prob_chosen(n: u64, params: &ModelParams) -> Result<f64> {
    let n_buyers = u64::from(params.n_buyers());
    if n > n_buyers {
        return Err(Error::domain(
            "n",
            n,
            "must not exceed the number of buyers",
        ));
    }
    let n_sellers = f64::from(params.n_sellers());
    if n == 0 {
        return Ok(((n_sellers - 1.0) / n_sellers).powf(n_buyers as f64));
    }
    Ok(binomial_pmf(n, n_buyers, 1.0 / n_sellers))
}

/// `P(Y_k = j | X_k = n)`: `j` sales out of `n` visits.
pub fn prob_sales_given_chosen(j: u64, n: u64, p_k: f64) -> Result<f64> {
    if j > n {
        return Err(Error::domain("j", j, "sales cannot exceed visits"));
    }
    if !(0.0..=1.0).contains(&p_k) {
        return Err(Error::domain("p_k", p_k, "must lie in [0, 1]"));
    }
    Ok(binomial_pmf(j, n, p_k))
}

/// `p_k`: probability that a buyer drawn from `pi` accepts seller `k`.
pub fn sale_probability(k: Quality, pi: &[f64], params: &ModelParams) -> f64 {
    check_pi(pi, params);
    pi.iter()
        .enumerate()
        .filter(|&(i, _)| params.trades_unchecked(k, i as Quality + 1))
        .fold(0.0, |acc, (_, &mass)| acc + mass)
}

/// Expected sales per round of one seller of quality `k`: `(N_b / N_s) p_k`.
pub fn expected_transactions(k: Quality, pi: &[f64], params: &ModelParams) -> f64 {
    expected_from_sale_probability(sale_probability(k, pi, params), params)
}

fn expected_from_sale_probability(p_k: f64, params: &ModelParams) -> f64 {
    f64::from(params.n_buyers()) / f64::from(params.n_sellers()) * p_k
}

/// `P(k' | k)`: law of the buyer state given that it trades with seller `k`.
pub fn conditional_state_distribution(
    k: Quality,
    pi: &[f64],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    check_pi(pi, params);
    let weights: Vec<f64> = pi
        .iter()
        .enumerate()
        .map(|(i, &mass)| {
            if params.trades_unchecked(k, i as Quality + 1) {
                mass
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedConditional { k });
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// `<O(k)> = sum_k' O(k, k') P(k' | k)`.
pub fn average_observable<F>(
    k: Quality,
    pi: &[f64],
    params: &ModelParams,
    observable: F,
) -> Result<f64>
where
    F: Fn(Quality, Quality) -> f64,
{
    let conditional = conditional_state_distribution(k, pi, params)?;
    Ok(conditional
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| observable(k, i as Quality + 1) * p)
        .sum())
}

/// Mean perceived quality of `k` among its buyers.
pub fn avg_observed_quality(k: Quality, pi: &[f64], params: &ModelParams) -> Result<f64> {
    average_observable(k, pi, params, |k, k_a| params.perceived_unchecked(k, k_a))
}

/// Mean `V^b / V^s` of `k` among its buyers.
pub fn avg_valuation_ratio(k: Quality, pi: &[f64], params: &ModelParams) -> Result<f64> {
    average_observable(k, pi, params, |k, k_a| {
        params.valuation_ratio(k, params.perceived_unchecked(k, k_a))
    })
}

/// Analytical curves indexed by quality; entry `i` is quality `i + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct MarketObservables {
    pub pi: Vec<f64>,
    pub sale_prob: Vec<f64>,
    pub expected_transactions: Vec<f64>,
    /// `None` where the seller never trades.
    pub avg_observed_quality: Vec<Option<f64>>,
    pub avg_valuation_ratio: Vec<Option<f64>>,
}

impl MarketObservables {
    pub fn compute(pi: &[f64], params: &ModelParams) -> Self {
        check_pi(pi, params);
        let rows: Vec<(f64, Option<f64>, Option<f64>)> = (1..=params.kappa())
            .into_par_iter()
            .map(|k| {
                let p_k = sale_probability(k, pi, params);
                if p_k > 0.0 {
                    (
                        p_k,
                        avg_observed_quality(k, pi, params).ok(),
                        avg_valuation_ratio(k, pi, params).ok(),
                    )
                } else {
                    (p_k, None, None)
                }
            })
            .collect();
        let sale_prob: Vec<f64> = rows.iter().map(|r| r.0).collect();
        Self {
            pi: pi.to_vec(),
            expected_transactions: sale_prob
                .iter()
                .map(|&p| expected_from_sale_probability(p, params))
                .collect(),
            sale_prob,
            avg_observed_quality: rows.iter().map(|r| r.1).collect(),
            avg_valuation_ratio: rows.iter().map(|r| r.2).collect(),
        }
    }

    pub fn kappa(&self) -> usize {
        self.pi.len()
    }

    /// Expected trades per round across every seller in the market.
    pub fn total_trades_per_round(&self, params: &ModelParams) -> f64 {
        f64::from(params.sellers_per_quality()) * self.expected_transactions.iter().sum::<f64>()
    }

    /// Smallest defined `<gamma(k)>` and its quality.
    pub fn min_valuation_ratio(&self) -> Option<(Quality, f64)> {
        self.avg_valuation_ratio
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i as Quality + 1, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}
