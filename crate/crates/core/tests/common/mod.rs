//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls into the kernel or statistics code under test.

#![allow(dead_code)]

/// Trade rule written out directly: perceived quality against the price.
pub fn trades(alpha: f64, beta: f64, lambda: f64, k: u32, k_a: u32) -> bool {
    beta * f64::from(k) + (1.0 - beta) * f64::from(k_a) >= lambda * f64::from(k).powf(alpha)
}

/// Dense row-major kernel `t[to][from]` built by enumerating every seller
/// quality a buyer in state `from` can draw.
pub fn brute_kernel(alpha: f64, beta: f64, lambda: f64, kappa: u32) -> Vec<Vec<f64>> {
    let n = kappa as usize;
    let mut t = vec![vec![0.0; n]; n];
    for from in 1..=kappa {
        for k in 1..=kappa {
            let to = if trades(alpha, beta, lambda, k, from) {
                k
            } else {
                from
            };
            t[to as usize - 1][from as usize - 1] += 1.0 / f64::from(kappa);
        }
    }
    t
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting; `None`
/// when a pivot falls below `1e-12`.
#[allow(clippy::needless_range_loop)]
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// The normalized null vector of `t - I` when it is one-dimensional.
pub fn unique_null_vector(t: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = t.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| t[i][j] - if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut b = vec![0.0; n];
    // the balance equations are dependent; trade one for the normalization
    a[n - 1] = vec![1.0; n];
    b[n - 1] = 1.0;
    solve_dense(a, b)
}

fn mat_mul(x: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|l| x[i][l] * y[l][j]).sum())
                .collect()
        })
        .collect()
}

/// `t^(2^64) x` by repeated squaring: the long-run law started from `x`.
/// Columns are renormalized after every squaring so that a column summing to
/// `1 - 1e-16` does not decay to zero over 2^64 steps.
pub fn long_run(t: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut p = t.to_vec();
    for _ in 0..64 {
        p = mat_mul(&p, &p);
        for j in 0..n {
            let s: f64 = (0..n).map(|i| p[i][j]).sum();
            for row in p.iter_mut() {
                row[j] /= s;
            }
        }
    }
    (0..x.len())
        .map(|i| (0..x.len()).map(|j| p[i][j] * x[j]).sum())
        .collect()
}

/// Binomial law by Pascal's recursion, one trial at a time.
pub fn pascal_binomial(n: u64, p: f64) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; row.len() + 1];
        for (j, &v) in row.iter().enumerate() {
            next[j] += v * (1.0 - p);
            next[j + 1] += v * p;
        }
        row = next;
    }
    row
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn max_abs_diff(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
