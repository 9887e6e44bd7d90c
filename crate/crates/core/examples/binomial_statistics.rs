//! How many buyers visit one seller and how many of them buy, against the
//! closed-form expected sales.
//!
//! `cargo run --release --example binomial_statistics`

use lemons::stats::{expected_transactions, prob_chosen, prob_sales_given_chosen};
use lemons::ModelParams;

fn main() -> lemons::Result<()> {
    // two qualities, no information: seller 2 sells exactly to buyers holding quality 2
    let params = ModelParams::new(1.0, 0.0, 1.0, 2, 100, 100)?;
    let p_k = 0.3;
    let pi = [1.0 - p_k, p_k];
    println!("P(no visitor) = {:.6}", prob_chosen(0, &params)?);
    let mut double_sum = 0.0;
    for n in 0..=u64::from(params.n_buyers()) {
        let visits = prob_chosen(n, &params)?;
        let sales: f64 = (0..=n)
            .map(|j| j as f64 * prob_sales_given_chosen(j, n, p_k).unwrap())
            .sum();
        double_sum += visits * sales;
        if n <= 4 {
            println!("P({n} visitors) = {visits:.6}, expected sales given them = {sales:.3}");
        }
    }
    println!(
        "expected sales: double sum {double_sum:.12}, closed form {:.12}",
        expected_transactions(2, &pi, &params)
    );
    Ok(())
}
