//! Buyer-state Markov chain.
//!
//! A buyer's state is the quality of the last good bought. Each round the
//! buyer meets a uniformly drawn seller; a successful trade moves the state
//! to the seller's quality, a refusal leaves it where it is. The kernel is
//! stored column-stochastic: entry `(m, n)` is `Pr(n -> m)`.
//!
//! Two routes to the long-run law are provided. [`stationary_distribution`]
//! iterates `P <- T P`. [`limit_distribution_exact`] decomposes the chain
//! into closed classes, solves each class's balance equations and the
//! absorption probabilities by dense elimination, and is meant as an
//! independent check for small `kappa`.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Quality};

/// Largest chain the elimination route accepts.
pub const EXACT_SOLVER_MAX_DIM: usize = 256;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: u64 = 1_000_000;

/// Dense column-stochastic kernel over states `1..=kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    // column-major: data[col * dim + row] = Pr(col -> row)
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Wraps column-major data. Columns must be probability vectors.
    pub fn from_column_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Configuration(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        let t = Self { dim, data };
        for col in 0..dim {
            let column = t.column(col);
            if column.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Configuration(format!(
                    "column {col} has an entry outside [0, 1]"
                )));
            }
            let sum: f64 = column.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Configuration(format!("column {col} sums to {sum}")));
            }
        }
        Ok(t)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Zero-based access: `Pr(col -> row)`.
    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.dim + row]
    }

    /// `Pr(from -> to)` in quality units.
    pub fn transition(&self, from: Quality, to: Quality) -> f64 {
        self.entry(to as usize - 1, from as usize - 1)
    }

    /// Outgoing distribution of zero-based state `col`.
    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.dim..(col + 1) * self.dim]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.data.chunks(self.dim).map(|c| c.iter().sum()).collect()
    }

    /// `T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for (col, &xn) in self.data.chunks(self.dim).zip(x) {
            if xn == 0.0 {
                continue;
            }
            for (yi, &t) in y.iter_mut().zip(col) {
                *yi += t * xn;
            }
        }
        y
    }

    /// `(row, col, value)` triplets of the nonzero entries, zero-based, column order.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.data.chunks(self.dim).enumerate().flat_map(|(col, c)| {
            c.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(move |(row, &v)| (row, col, v))
        })
    }
}

/// Kernel of a single buyer's state chain.
///
/// From state `n`, a seller of quality `m` is drawn with weight `s / N_s`
/// (`s` sellers per quality, so `1/kappa`). A drawn seller that trades moves
/// the buyer to `m`; every refusal, summed over all `w`, stays on the
/// diagonal. Success and refusal are the two sides of one predicate so each
/// column holds exactly `kappa` units of `1/kappa`.
pub fn build_transition_matrix(params: &ModelParams) -> TransitionMatrix {
    let kappa = params.kappa();
    let dim = kappa as usize;
    let weight = f64::from(params.sellers_per_quality()) / f64::from(params.n_sellers());
    let reservation: Vec<f64> = (1..=kappa).map(|m| params.reservation(m)).collect();

    let mut data = vec![0.0; dim * dim];
    data.par_chunks_mut(dim)
        .enumerate()
        .for_each(|(col, column)| {
            let n = col as Quality + 1;
            let mut refusals = 0u32;
            for (row, entry) in column.iter_mut().enumerate() {
                let m = row as Quality + 1;
                if params.perceived_unchecked(m, n) >= reservation[row] {
                    if m != n {
                        *entry = weight;
                    }
                } else {
                    refusals += 1;
                }
            }
            let self_trade = u32::from(params.perceived_unchecked(n, n) >= reservation[col]);
            column[col] = f64::from(refusals + self_trade) * weight;
        });
    TransitionMatrix { dim, data }
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryDistribution {
    /// `pi[k - 1]` is the mass on quality `k`.
    pub pi: Vec<f64>,
    /// `||T pi - pi||_1`.
    pub residual: f64,
    pub iterations: u64,
}

impl StationaryDistribution {
    pub fn mass(&self, k: Quality) -> f64 {
        self.pi[k as usize - 1]
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: u64,
    /// Starting vector; uniform when `None`.
    pub init: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            init: None,
        }
    }
}

fn initial_vector(dim: usize, init: Option<&[f64]>) -> Result<Vec<f64>> {
    match init {
        None => Ok(vec![1.0 / dim as f64; dim]),
        Some(v) => {
            if v.len() != dim {
                return Err(Error::Configuration(format!(
                    "initial vector has length {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                return Err(Error::Configuration(
                    "initial vector must be nonnegative".into(),
                ));
            }
            let sum: f64 = v.iter().sum();
            if sum <= 0.0 {
                return Err(Error::Configuration("initial vector has zero mass".into()));
            }
            Ok(v.iter().map(|x| x / sum).collect())
        }
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Power iteration until `||T pi - pi||_1 <= tol`.
///
/// When the chain has several closed classes the answer depends on the
/// starting vector; see [`analyze_ergodicity`].
pub fn stationary_distribution(
    t: &TransitionMatrix,
    opts: &SolverOptions,
) -> Result<StationaryDistribution> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::domain("tol", opts.tol, "must be > 0"));
    }
    let mut x = initial_vector(t.dim, opts.init.as_deref())?;
    let mut iterations = 0u64;
    loop {
        let mut y = t.apply(&x);
        let residual = l1_distance(&x, &y);
        if residual <= opts.tol {
            return Ok(StationaryDistribution {
                pi: x,
                residual,
                iterations,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::IterationLimit {
                iterations,
                residual,
                last: x,
            });
        }
        let sum: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= sum);
        x = y;
        iterations += 1;
    }
}

/// Long-run law of the chain started from `init` (uniform by default),
/// computed without iterating.
///
/// Closed classes come from a boolean reachability closure; each class's
/// balance equations and the absorption probabilities of the transient
/// states are solved by Gaussian elimination with partial pivoting.
pub fn limit_distribution_exact(t: &TransitionMatrix, init: Option<&[f64]>) -> Result<Vec<f64>> {
    let dim = t.dim;
    if dim > EXACT_SOLVER_MAX_DIM {
        return Err(Error::Configuration(format!(
            "exact solver limited to {EXACT_SOLVER_MAX_DIM} states, got {dim}"
        )));
    }
    let x0 = initial_vector(dim, init)?;

    // reach[i][j]: j reachable from i in zero or more steps
    let mut reach = vec![vec![false; dim]; dim];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
        for (j, r) in row.iter_mut().enumerate() {
            if t.entry(j, i) > 0.0 {
                *r = true;
            }
        }
    }
    for k in 0..dim {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|row| row[k]) {
            for (r, &v) in row.iter_mut().zip(&via) {
                *r |= v;
            }
        }
    }
    let recurrent: Vec<bool> = (0..dim)
        .map(|i| (0..dim).all(|j| !reach[i][j] || reach[j][i]))
        .collect();

    let mut class_of = vec![usize::MAX; dim];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..dim {
        if recurrent[i] && class_of[i] == usize::MAX {
            let members: Vec<usize> = (0..dim).filter(|&j| reach[i][j]).collect();
            for &j in &members {
                class_of[j] = classes.len();
            }
            classes.push(members);
        }
    }
    let transient: Vec<usize> = (0..dim).filter(|&i| !recurrent[i]).collect();

    let mut limit = vec![0.0; dim];
    for (c, members) in classes.iter().enumerate() {
        let local = class_balance(t, members)?;
        let absorption = absorption_probabilities(t, &transient, &class_of, c)?;
        let weight: f64 = members.iter().map(|&i| x0[i]).sum::<f64>()
            + transient
                .iter()
                .zip(&absorption)
                .map(|(&i, h)| x0[i] * h)
                .sum::<f64>();
        for (&i, p) in members.iter().zip(&local) {
            limit[i] += weight * p;
        }
    }
    Ok(limit)
}

/// Solves `(T_C - I) pi = 0`, `sum pi = 1` on a closed class.
fn class_balance(t: &TransitionMatrix, members: &[usize]) -> Result<Vec<f64>> {
    let size = members.len();
    let mut a = vec![vec![0.0; size]; size];
    let mut rhs = vec![0.0; size];
    for (r, &i) in members.iter().enumerate() {
        for (c, &j) in members.iter().enumerate() {
            a[r][c] = t.entry(i, j) - if r == c { 1.0 } else { 0.0 };
        }
    }
    // one balance equation is redundant; replace it with normalization
    a[size - 1].iter_mut().for_each(|v| *v = 1.0);
    rhs[size - 1] = 1.0;
    gaussian_solve(a, rhs)
}

/// `h(i) = Pr(hit class c | start at transient i)`.
fn absorption_probabilities(
    t: &TransitionMatrix,
    transient: &[usize],
    class_of: &[usize],
    c: usize,
) -> Result<Vec<f64>> {
    let size = transient.len();
    if size == 0 {
        return Ok(Vec::new());
    }
    let mut a = vec![vec![0.0; size]; size];
    let mut rhs = vec![0.0; size];
    for (r, &i) in transient.iter().enumerate() {
        for (col, &j) in transient.iter().enumerate() {
            a[r][col] = if r == col { 1.0 } else { 0.0 } - t.entry(j, i);
        }
        rhs[r] = (0..t.dim)
            .filter(|&j| class_of[j] == c)
            .map(|j| t.entry(j, i))
            .sum();
    }
    gaussian_solve(a, rhs)
}

// rows `row` and `col` of `a` are read and written together
#[allow(clippy::needless_range_loop)]
fn gaussian_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Configuration(
                "singular system in exact solver".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    /// States whose diagonal entry is exactly 1.
    pub absorbing_states: Vec<Quality>,
    /// Closed communicating classes, each sorted, ordered by smallest member.
    pub recurrent_classes: Vec<Vec<Quality>>,
    pub transient_states: Vec<Quality>,
    /// Exactly one closed class.
    pub is_ergodic_on_support: bool,
    /// Every closed class is a single absorbing state: every buyer ends up frozen
    /// in one state (for the bottom states that means no trade at all).
    pub predicted_collapse: bool,
}

pub fn analyze_ergodicity(t: &TransitionMatrix) -> ErgodicityReport {
    let dim = t.dim;
    let absorbing_states: Vec<Quality> = (0..dim)
        .filter(|&i| t.entry(i, i) == 1.0)
        .map(|i| i as Quality + 1)
        .collect();

    let mut graph = DiGraph::<(), ()>::with_capacity(dim, 0);
    for _ in 0..dim {
        graph.add_node(());
    }
    for (row, col, _) in t.nonzero_entries() {
        if row != col {
            graph.add_edge(NodeIndex::new(col), NodeIndex::new(row), ());
        }
    }
    let components = tarjan_scc(&graph);
    let mut component_of = vec![0usize; dim];
    for (c, members) in components.iter().enumerate() {
        for node in members {
            component_of[node.index()] = c;
        }
    }
    let mut closed = vec![true; components.len()];
    for edge in graph.raw_edges() {
        let (from, to) = (edge.source().index(), edge.target().index());
        if component_of[from] != component_of[to] {
            closed[component_of[from]] = false;
        }
    }

    let mut recurrent_classes: Vec<Vec<Quality>> = components
        .iter()
        .zip(&closed)
        .filter(|(_, &c)| c)
        .map(|(members, _)| {
            let mut states: Vec<Quality> =
                members.iter().map(|n| n.index() as Quality + 1).collect();
            states.sort_unstable();
            states
        })
        .collect();
    recurrent_classes.sort_unstable_by_key(|c| c[0]);

    let transient_states: Vec<Quality> = (0..dim)
        .filter(|&i| !closed[component_of[i]])
        .map(|i| i as Quality + 1)
        .collect();

    let predicted_collapse = !recurrent_classes.is_empty()
        && recurrent_classes
            .iter()
            .all(|c| c.len() == 1 && absorbing_states.binary_search(&c[0]).is_ok());

    ErgodicityReport {
        is_ergodic_on_support: recurrent_classes.len() == 1,
        absorbing_states,
        recurrent_classes,
        transient_states,
        predicted_collapse,
    }
}
