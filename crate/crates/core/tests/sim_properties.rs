mod common;

use lemons::{
    build_transition_matrix, stationary_distribution, InitPolicy, ModelParams, SimState,
    SolverOptions,
};
use proptest::prelude::*;

fn stationary(p: &ModelParams) -> Vec<f64> {
    stationary_distribution(&build_transition_matrix(p), &SolverOptions::default())
        .unwrap()
        .pi
}

/// Probability that one buyer drawn from `pi` accepts the seller it meets.
fn acceptance_probability(p: &ModelParams, pi: &[f64]) -> f64 {
    let kappa = p.kappa();
    (1..=kappa)
        .map(|k_a| {
            let ok = (1..=kappa)
                .filter(|&k| p.trade_occurs(k, k_a).unwrap())
                .count();
            pi[k_a as usize - 1] * ok as f64 / f64::from(kappa)
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn same_seed_same_run(
        beta in 0.0..=1.0f64, lambda in 0.5..4.0f64, kappa in 2u32..=20, buyers in 1u32..=60, seed: u64,
    ) {
        let p = ModelParams::new(0.5, beta, lambda, kappa, 2 * kappa, buyers).unwrap();
        let run = || {
            let mut s = SimState::init(&p, seed, &InitPolicy::UniformRandom).unwrap();
            let stats = s.run(300, 30).unwrap();
            (serde_json::to_string(&stats).unwrap(), s.buyer_states().to_vec())
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn every_recorded_trade_obeys_the_rule(
        alpha in 0.1..=1.5f64, beta in 0.0..=1.0f64, lambda in 0.2..4.0f64, kappa in 2u32..=20, seed: u64,
    ) {
        let p = ModelParams::new(alpha, beta, lambda, kappa, kappa, 40).unwrap();
        let mut s = SimState::init(&p, seed, &InitPolicy::UniformRandom).unwrap();
        for _ in 0..50 {
            let before = s.buyer_states().to_vec();
            let record = s.step();
            prop_assert_eq!(record.attempts.len(), 40);
            let mut sold = vec![0u32; p.n_sellers() as usize];
            for a in &record.attempts {
                prop_assert_eq!(a.prior_state, before[a.buyer as usize]);
                prop_assert_eq!(a.seller_quality, s.seller_qualities()[a.seller as usize]);
                prop_assert_eq!(a.traded, common::trades(alpha, beta, lambda, a.seller_quality, a.prior_state));
                prop_assert_eq!(a.perceived, p.perceived_quality(a.seller_quality, a.prior_state).unwrap());
                let after = s.buyer_states()[a.buyer as usize];
                prop_assert_eq!(after, if a.traded { a.seller_quality } else { a.prior_state });
                sold[a.seller as usize] += u32::from(a.traded);
            }
            prop_assert_eq!(&record.transactions_per_seller, &sold);
            prop_assert_eq!(record.trades_total, u64::from(sold.iter().sum::<u32>()));
        }
    }
}

#[test]
fn a_single_buyer_walks_the_kernel() {
    for (beta, lambda, kappa) in [(0.6, 2.0, 20), (1.0, 3.0, 50), (0.4, 1.5, 30)] {
        let p = ModelParams::new(0.5, beta, lambda, kappa, kappa, 1).unwrap();
        let mut s = SimState::init(&p, 5, &InitPolicy::UniformRandom).unwrap();
        let stats = s.run(1_000_000, 1000).unwrap();
        let tv = common::total_variation(&stats.empirical_pi, &stationary(&p));
        assert!(tv <= 0.01, "beta {beta}: TV {tv}");
    }
}

#[test]
fn trades_per_round_match_the_stationary_rate() {
    let p = ModelParams::new(0.5, 0.6, 3.0, 50, 100, 200).unwrap();
    let pi = stationary(&p);
    let rate = acceptance_probability(&p, &pi);
    let seeds = 400u64;
    let mean = (0..seeds)
        .map(|seed| {
            let mut s = SimState::init(&p, seed, &InitPolicy::Stationary(pi.clone())).unwrap();
            s.step().trades_total as f64
        })
        .sum::<f64>()
        / seeds as f64;
    // buyers are independent draws from pi, so a round's trades are Binomial(N_b, rate)
    let nb = f64::from(p.n_buyers());
    let sigma = (nb * rate * (1.0 - rate) / seeds as f64).sqrt();
    assert!(
        (mean - nb * rate).abs() <= 4.0 * sigma,
        "{mean} vs {}",
        nb * rate
    );
}

#[test]
fn stationary_initialization_samples_the_law() {
    let p = ModelParams::new(0.5, 0.6, 3.0, 50, 50, 20_000).unwrap();
    let pi = stationary(&p);
    let s = SimState::init(&p, 77, &InitPolicy::Stationary(pi.clone())).unwrap();
    let n = f64::from(p.n_buyers());
    for (k, (&count, &mass)) in s.state_histogram().iter().zip(&pi).enumerate() {
        let sigma = (n * mass * (1.0 - mass)).sqrt();
        assert!(
            (count as f64 - n * mass).abs() <= 4.0 * sigma.max(1e-9),
            "k {}: {count} vs {}",
            k + 1,
            n * mass
        );
    }
}

#[test]
fn collapse_is_absorbing() {
    let base = ModelParams::new(0.5, 1.0, 5.0, 100, 100, 100).unwrap();
    let p = base.with_beta(base.critical_beta().raw - 0.05).unwrap();
    let mut s = SimState::init(&p, 3, &InitPolicy::AllAtQuality(1)).unwrap();
    assert!(s.detect_collapse(50));
    for _ in 0..500 {
        assert_eq!(s.step().trades_total, 0);
        assert!(s.detect_collapse(50));
        assert_eq!(s.dead_buyer_fraction(), 1.0);
    }

    let mut s = SimState::init(&p, 3, &InitPolicy::UniformRandom).unwrap();
    // a quiet spell can trip the trailing window and pass; once every buyer
    // sits in a dead state the flag must stay up
    let mut frozen = false;
    for _ in 0..3000 {
        s.step();
        let now = s.detect_collapse(50);
        assert!(!frozen || now, "collapse undone at round {}", s.round());
        frozen |= now && s.dead_buyer_fraction() == 1.0;
    }
    assert!(frozen);
}

#[test]
fn full_information_never_collapses() {
    let p = ModelParams::new(0.5, 1.0, 10.0, 1000, 1000, 1000).unwrap();
    let mut s = SimState::init(&p, 1, &InitPolicy::UniformRandom).unwrap();
    let stats = s.run(300, 30).unwrap();
    assert!(!stats.collapse_flag);
    assert!(stats.trades_by_round.iter().all(|&t| t > 0));
}

#[test]
fn short_windows_use_what_was_played() {
    let p = ModelParams::new(0.5, 1.0, 2.0, 10, 10, 10).unwrap();
    let mut s = SimState::init(&p, 1, &InitPolicy::AllAtQuality(10)).unwrap();
    assert!(!s.detect_collapse(1000));
    s.step();
    assert!(!s.detect_collapse(1000));
}

#[test]
fn bad_runs_are_rejected() {
    let p = ModelParams::new(0.5, 1.0, 2.0, 10, 10, 10).unwrap();
    assert!(SimState::init(&p, 1, &InitPolicy::AllAtQuality(0)).is_err());
    assert!(SimState::init(&p, 1, &InitPolicy::AllAtQuality(11)).is_err());
    assert!(SimState::init(&p, 1, &InitPolicy::Stationary(vec![1.0; 3])).is_err());
    let mut s = SimState::init(&p, 1, &InitPolicy::UniformRandom).unwrap();
    assert!(s.run(10, 10).is_err());
}
