//! Value iteration on the uniformized model, optimal policy extraction,
//! the stationary distribution of the embedded chain, and report metrics.
//!
//! The Bellman update exploits the factored kernel: with
//! W(c) = Σ_{s′ ∈ c} rate(s′)·ν̄(s′), the uniformized expectation of a row
//! with post-action configuration c is
//! (1 − γ_c/ρ)·ν̄(s) + W(c)/ρ, so a sweep costs O(|S| + rows).

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::Kernel;
use crate::rewards::{RewardTable, UniformizedModel};
use crate::state_space::{Action, Event, ModelError, StateSpace, SystemState};

/// Iteration cap used when none is given.
pub const DEFAULT_MAX_ITERS: usize = 100_000;

const PARALLEL_MIN_STATES: usize = 1 << 14;
const POWER_TOLERANCE_L1: f64 = 1e-13;
const POWER_MAX_ITERS: usize = 1_000_000;
const DIRECT_SOLVE_MAX_STATES: usize = 4096;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("discount {0} must lie in (0, 1)")]
    BadDiscount(f64),
    #[error("value iteration did not converge in {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("chain is reducible: {} closed classes (first members {:?})", .classes.len(), .classes.iter().map(|c| c[0]).collect::<Vec<_>>())]
    Reducible { classes: Vec<Vec<usize>> },
    #[error("stationary solve did not converge (residual {0:e})")]
    SteadyStateNotConverged(f64),
    #[error("no arrival state carries stationary mass")]
    NoArrivalMass,
    #[error("policy dump: {0}")]
    PolicyDump(String),
    #[error("policy dump was produced for a different state space ({found} != {expected})")]
    HashMismatch { expected: String, found: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// ν̄(s) for every state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(pub Vec<f64>);

impl ValueVector {
    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyMeta {
    pub iterations: usize,
    /// ‖ν̄^{t+1} − ν̄^t‖∞ of the final sweep.
    pub residual: f64,
    pub rho: f64,
    pub discount: f64,
    /// Sup-norm residual of every sweep, in order.
    pub residual_history: Vec<f64>,
}

/// A deterministic stationary policy, stored as one kernel row per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    rows: Vec<u32>,
    pub meta: PolicyMeta,
}

impl Policy {
    /// Picks a row per state with `select(state, rows_of_state)`.
    pub fn from_selector(
        kernel: &Kernel,
        mut select: impl FnMut(usize, std::ops::Range<usize>) -> usize,
    ) -> Policy {
        let rows = (0..kernel.num_states())
            .map(|s| {
                let range = kernel.rows_of(s);
                let row = select(s, range.clone());
                assert!(range.contains(&row), "row {row} does not belong to {s}");
                row as u32
            })
            .collect();
        Policy {
            rows,
            meta: PolicyMeta::default(),
        }
    }

    /// Rejects every request.
    pub fn reject_all(kernel: &Kernel) -> Policy {
        Policy::from_selector(kernel, |_, rows| rows.start)
    }

    /// Accepts on the first feasible (i, k) whenever one exists.
    pub fn first_fit(kernel: &Kernel) -> Policy {
        Policy::from_selector(kernel, |_, rows| (rows.start + 1).min(rows.end - 1))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, state: usize) -> usize {
        self.rows[state] as usize
    }

    pub fn action(&self, kernel: &Kernel, state: usize) -> Action {
        kernel.action(self.row(state))
    }
}

fn config_weights(space: &StateSpace, kernel: &Kernel, values: &[f64], out: &mut [f64]) {
    let rates = kernel.state_rates();
    let fill = |(c, w): (usize, &mut f64)| {
        let range = space.states_of_config(c);
        *w = rates[range.clone()]
            .iter()
            .zip(&values[range])
            .map(|(r, v)| r * v)
            .sum();
    };
    if out.len() >= PARALLEL_MIN_STATES {
        out.par_iter_mut().enumerate().for_each(fill);
    } else {
        out.iter_mut().enumerate().for_each(fill);
    }
}

/// Best (value, row) under the uniformized Bellman operator; ties keep the
/// earliest row.
#[inline]
fn best_row(
    kernel: &Kernel,
    model: &UniformizedModel,
    weights: &[f64],
    state: usize,
    value: f64,
) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut best_row = usize::MAX;
    let inv_rho = 1.0 / model.rho;
    let posts = kernel.row_posts();
    let gammas = kernel.config_gammas();
    for row in kernel.rows_of(state) {
        let c = posts[row] as usize;
        let expect = (1.0 - gammas[c] * inv_rho) * value + weights[c] * inv_rho;
        let q = model.rbar[row] + model.discount * expect;
        if q > best {
            best = q;
            best_row = row;
        }
    }
    (best, best_row)
}

/// Per-sweep constants: q = r̄ + a_c·ν̄(s) + b·W(c) with
/// a_c = λ̄(1 − γ_c/ρ) and b = λ̄/ρ.
struct SweepPlan<'a> {
    config_start: &'a [u32],
    row_start: &'a [u32],
    posts: &'a [u32],
    rates: &'a [f64],
    rbar: &'a [f64],
    self_coef: Vec<f64>,
    weight_coef: f64,
    chunks: Vec<std::ops::Range<usize>>,
}

const SWEEP_CHUNK_STATES: usize = 1 << 13;

impl<'a> SweepPlan<'a> {
    fn new(space: &'a StateSpace, kernel: &'a Kernel, model: &'a UniformizedModel) -> Self {
        let config_start = space.config_starts();
        let num_configs = space.num_configs();
        let mut chunks = Vec::new();
        let mut first = 0;
        for c in 1..=num_configs {
            let states = (config_start[c] - config_start[first]) as usize;
            if states >= SWEEP_CHUNK_STATES || c == num_configs {
                chunks.push(first..c);
                first = c;
            }
        }
        SweepPlan {
            config_start,
            row_start: kernel.row_starts(),
            posts: kernel.row_posts(),
            rates: kernel.state_rates(),
            rbar: &model.rbar,
            self_coef: kernel
                .config_gammas()
                .iter()
                .map(|g| model.discount * (1.0 - g / model.rho))
                .collect(),
            weight_coef: model.discount / model.rho,
            chunks,
        }
    }

    /// Updates the states of `configs`, writing their new values and the
    /// new W of each of those configurations. Returns the sup-norm change.
    fn run_chunk(
        &self,
        configs: std::ops::Range<usize>,
        values: &[f64],
        weights: &[f64],
        next: &mut [f64],
        next_weights: &mut [f64],
    ) -> f64 {
        let base = self.config_start[configs.start] as usize;
        let mut residual: f64 = 0.0;
        let mut s = base;
        let mut first = self.row_start[s] as usize;
        for (c, w_out) in configs.zip(next_weights.iter_mut()) {
            let end = self.config_start[c + 1] as usize;
            let mut w = 0.0;
            while s < end {
                let v = values[s];
                let last = self.row_start[s + 1] as usize;
                let q_of = |row: usize| {
                    let post = self.posts[row] as usize;
                    self.rbar[row] + self.self_coef[post] * v + self.weight_coef * weights[post]
                };
                let mut best = q_of(first);
                for row in first + 1..last {
                    let q = q_of(row);
                    if q > best {
                        best = q;
                    }
                }
                next[s - base] = best;
                w += self.rates[s] * best;
                let change = (best - v).abs();
                if change > residual {
                    residual = change;
                }
                s += 1;
                first = last;
            }
            *w_out = w;
        }
        residual
    }

    /// One application of the Bellman operator. `weights` must hold W of
    /// `values`; on return `next_weights` holds W of `next`.
    fn sweep(
        &self,
        values: &[f64],
        weights: &[f64],
        next: &mut [f64],
        next_weights: &mut [f64],
    ) -> f64 {
        if values.len() < PARALLEL_MIN_STATES {
            return self.run_chunk(0..weights.len(), values, weights, next, next_weights);
        }
        let mut parts = Vec::with_capacity(self.chunks.len());
        let mut rest_states = next;
        let mut rest_weights = next_weights;
        for chunk in &self.chunks {
            let states = (self.config_start[chunk.end] - self.config_start[chunk.start]) as usize;
            let (head, tail) = rest_states.split_at_mut(states);
            let (whead, wtail) = rest_weights.split_at_mut(chunk.len());
            parts.push((chunk.clone(), head, whead));
            rest_states = tail;
            rest_weights = wtail;
        }
        parts
            .into_par_iter()
            .map(|(configs, out, wout)| self.run_chunk(configs, values, weights, out, wout))
            .reduce(|| 0.0, f64::max)
    }
}

/// Greedy policy with respect to `values`.
pub fn greedy_policy(
    space: &StateSpace,
    kernel: &Kernel,
    model: &UniformizedModel,
    values: &ValueVector,
) -> Policy {
    let mut weights = vec![0.0; space.num_configs()];
    config_weights(space, kernel, &values.0, &mut weights);
    let rows = (0..space.len())
        .map(|s| best_row(kernel, model, &weights, s, values.0[s]).1 as u32)
        .collect();
    Policy {
        rows,
        meta: PolicyMeta {
            rho: model.rho,
            discount: model.discount,
            ..PolicyMeta::default()
        },
    }
}

/// Jacobi value iteration from ν̄⁰ = 0 until the sup-norm
/// change drops to `tolerance`, then greedy policy extraction.
pub fn value_iteration(
    space: &StateSpace,
    kernel: &Kernel,
    model: &UniformizedModel,
    tolerance: f64,
    max_iters: usize,
) -> Result<(ValueVector, Policy), SolverError> {
    if !(model.discount > 0.0 && model.discount < 1.0) {
        return Err(SolverError::BadDiscount(model.discount));
    }
    let n = space.len();
    let plan = SweepPlan::new(space, kernel, model);
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    // W of the all-zero start is zero
    let mut weights = vec![0.0; space.num_configs()];
    let mut next_weights = vec![0.0; space.num_configs()];
    let mut history = Vec::new();
    loop {
        let residual = plan.sweep(&values, &weights, &mut next, &mut next_weights);
        std::mem::swap(&mut values, &mut next);
        std::mem::swap(&mut weights, &mut next_weights);
        history.push(residual);
        if residual <= tolerance {
            break;
        }
        if history.len() >= max_iters {
            return Err(SolverError::NotConverged {
                iterations: history.len(),
                residual,
            });
        }
    }
    let values = ValueVector(values);
    let mut policy = greedy_policy(space, kernel, model, &values);
    policy.meta.iterations = history.len();
    policy.meta.residual = *history.last().unwrap_or(&0.0);
    policy.meta.residual_history = history;
    Ok((values, policy))
}

/// Geometric bound on the sweep count: log(tol·(1−λ̄)/‖ν̄¹‖)/log λ̄ + 2.
pub fn iteration_bound(tolerance: f64, discount: f64, first_residual: f64) -> f64 {
    if first_residual <= tolerance {
        return 1.0;
    }
    (tolerance * (1.0 - discount) / first_residual).ln() / discount.ln() + 2.0
}

/// A discrete-time Markov chain as used by the stationary solver.
pub trait Chain: Sync {
    fn num_states(&self) -> usize;
    /// `out = pi · P`.
    fn left_multiply(&self, pi: &[f64], out: &mut [f64]);
    fn for_each_successor(&self, s: usize, f: &mut dyn FnMut(usize));
    /// Marks every state from which `target` is reachable.
    fn ancestors(&self, target: usize) -> Vec<bool>;
}

/// Sparse row-stochastic matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds from per-row (column, probability) lists.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> TransitionMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, p) in row {
                cols.push(c as u32);
                vals.push(p);
            }
            row_ptr.push(cols.len());
        }
        TransitionMatrix {
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[s]..self.row_ptr[s + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &p)| (c as usize, p))
    }

    pub fn row_sum(&self, s: usize) -> f64 {
        self.row(s).map(|x| x.1).sum()
    }

    pub fn row_len(&self, s: usize) -> usize {
        self.row_ptr[s + 1] - self.row_ptr[s]
    }
}

impl Chain for TransitionMatrix {
    fn num_states(&self) -> usize {
        self.dim()
    }

    fn left_multiply(&self, pi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s, &mass) in pi.iter().enumerate() {
            if mass != 0.0 {
                for (c, p) in self.row(s) {
                    out[c] += mass * p;
                }
            }
        }
    }

    fn for_each_successor(&self, s: usize, f: &mut dyn FnMut(usize)) {
        for (c, p) in self.row(s) {
            if p > 0.0 {
                f(c);
            }
        }
    }

    fn ancestors(&self, target: usize) -> Vec<bool> {
        let n = self.dim();
        let mut counts = vec![0usize; n + 1];
        for s in 0..n {
            for (c, p) in self.row(s) {
                if p > 0.0 {
                    counts[c + 1] += 1;
                }
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut preds = vec![0u32; counts[n]];
        for s in 0..n {
            for (c, p) in self.row(s) {
                if p > 0.0 {
                    preds[fill[c]] = s as u32;
                    fill[c] += 1;
                }
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([target]);
        seen[target] = true;
        while let Some(x) = queue.pop_front() {
            for &p in &preds[counts[x]..counts[x + 1]] {
                if !seen[p as usize] {
                    seen[p as usize] = true;
                    queue.push_back(p as usize);
                }
            }
        }
        seen
    }
}

/// P for a fixed policy with row s = p(·|s, d(s)).
pub fn embedded_matrix(space: &StateSpace, kernel: &Kernel, policy: &Policy) -> TransitionMatrix {
    TransitionMatrix::from_rows(
        (0..space.len())
            .map(|s| kernel.successors_of(space, policy.row(s)).collect())
            .collect(),
    )
}

/// The embedded chain of a policy without materializing P: all mass of a
/// state flows to its post-action configuration and is split by event rate.
pub struct PolicyChain<'a> {
    space: &'a StateSpace,
    kernel: &'a Kernel,
    post: Vec<u32>,
}

impl<'a> PolicyChain<'a> {
    pub fn new(space: &'a StateSpace, kernel: &'a Kernel, policy: &Policy) -> Self {
        let post = (0..space.len())
            .map(|s| kernel.post_config(policy.row(s)) as u32)
            .collect();
        PolicyChain {
            space,
            kernel,
            post,
        }
    }
}

impl Chain for PolicyChain<'_> {
    fn num_states(&self) -> usize {
        self.space.len()
    }

    fn left_multiply(&self, pi: &[f64], out: &mut [f64]) {
        let mut mass = vec![0.0; self.space.num_configs()];
        for (s, &p) in pi.iter().enumerate() {
            mass[self.post[s] as usize] += p;
        }
        let rates = self.kernel.state_rates();
        let gammas = self.kernel.config_gammas();
        for (c, &m) in mass.iter().enumerate() {
            let range = self.space.states_of_config(c);
            let scale = m / gammas[c];
            for s in range {
                out[s] = scale * rates[s];
            }
        }
    }

    fn for_each_successor(&self, s: usize, f: &mut dyn FnMut(usize)) {
        let c = self.post[s] as usize;
        for succ in self.space.states_of_config(c) {
            if self.kernel.state_rate(succ) > 0.0 {
                f(succ);
            }
        }
    }

    fn ancestors(&self, target: usize) -> Vec<bool> {
        let n = self.space.len();
        let configs = self.space.num_configs();
        let mut counts = vec![0usize; configs + 1];
        for &c in &self.post {
            counts[c as usize + 1] += 1;
        }
        for i in 0..configs {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut by_post = vec![0u32; n];
        for (s, &c) in self.post.iter().enumerate() {
            by_post[fill[c as usize]] = s as u32;
            fill[c as usize] += 1;
        }
        let mut seen = vec![false; n];
        let mut config_seen = vec![false; configs];
        let mut queue = VecDeque::from([target]);
        seen[target] = true;
        while let Some(x) = queue.pop_front() {
            if self.kernel.state_rate(x) <= 0.0 {
                continue;
            }
            let c = self.space.config_of(x);
            if std::mem::replace(&mut config_seen[c], true) {
                continue;
            }
            for &p in &by_post[counts[c]..counts[c + 1]] {
                if !seen[p as usize] {
                    seen[p as usize] = true;
                    queue.push_back(p as usize);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub pi: Vec<f64>,
    /// ‖πP − π‖∞ of the returned vector.
    pub residual: f64,
    pub iterations: usize,
}

fn forward_reachable(chain: &dyn Chain, root: usize) -> Vec<bool> {
    let mut seen = vec![false; chain.num_states()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(x) = queue.pop_front() {
        chain.for_each_successor(x, &mut |y| {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        });
    }
    seen
}

/// Closed communicating classes among `scope`, for error reports.
fn closed_classes(chain: &dyn Chain, scope: &[bool]) -> Vec<Vec<usize>> {
    use petgraph::graph::{DiGraph, NodeIndex};
    let n = chain.num_states();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n);
    for _ in 0..n {
        graph.add_node(());
    }
    for s in (0..n).filter(|&s| scope[s]) {
        chain.for_each_successor(s, &mut |t| {
            graph.add_edge(NodeIndex::new(s), NodeIndex::new(t), ());
        });
    }
    let sccs = petgraph::algo::kosaraju_scc(&graph);
    let mut classes = Vec::new();
    for scc in sccs {
        let members: Vec<usize> = scc.iter().map(|n| n.index()).collect();
        if !scope[members[0]] {
            continue;
        }
        let mut inside = vec![false; n];
        members.iter().for_each(|&m| inside[m] = true);
        let mut closed = true;
        for &m in &members {
            chain.for_each_successor(m, &mut |t| closed &= inside[t]);
        }
        if closed {
            let mut members = members;
            members.sort_unstable();
            classes.push(members);
        }
    }
    classes.sort();
    classes
}

fn residual_inf(chain: &dyn Chain, pi: &[f64]) -> f64 {
    let mut next = vec![0.0; pi.len()];
    chain.left_multiply(pi, &mut next);
    next.iter()
        .zip(pi)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

fn direct_solve(chain: &dyn Chain, scope: &[bool]) -> Option<Vec<f64>> {
    let idx: Vec<usize> = (0..chain.num_states()).filter(|&s| scope[s]).collect();
    let m = idx.len();
    let mut local = vec![usize::MAX; chain.num_states()];
    for (j, &s) in idx.iter().enumerate() {
        local[s] = j;
    }
    // rows of (Pᵀ − I), last equation replaced by Σπ = 1
    let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
    let mut unit = vec![0.0; chain.num_states()];
    let mut col = vec![0.0; chain.num_states()];
    for (j, &s) in idx.iter().enumerate() {
        unit[s] = 1.0;
        chain.left_multiply(&unit, &mut col);
        unit[s] = 0.0;
        for (t, &p) in col.iter().enumerate() {
            if p != 0.0 && local[t] != usize::MAX {
                a[(local[t], j)] += p;
            }
        }
        a[(j, j)] -= 1.0;
    }
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    let mut pi = vec![0.0; chain.num_states()];
    for (j, &s) in idx.iter().enumerate() {
        pi[s] = x[j].max(0.0);
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Some(pi)
}

fn solve_stationary(chain: &dyn Chain, root: Option<usize>) -> Result<SteadyState, SolverError> {
    let n = chain.num_states();
    let scope = match root {
        Some(r) => forward_reachable(chain, r),
        None => vec![true; n],
    };
    let in_scope = scope.iter().filter(|&&b| b).count();
    let mut pi = vec![0.0; n];
    match root {
        Some(r) => pi[r] = 1.0,
        None => pi.iter_mut().for_each(|p| *p = 1.0 / n as f64),
    }
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < POWER_MAX_ITERS {
        chain.left_multiply(&pi, &mut next);
        iterations += 1;
        let mut l1 = 0.0;
        let mut total = 0.0;
        for (p, q) in pi.iter_mut().zip(&next) {
            l1 += (q - *p).abs();
            *p = 0.5 * (*p + q);
            total += *p;
        }
        pi.iter_mut().for_each(|p| *p /= total);
        if l1 <= POWER_TOLERANCE_L1 {
            converged = true;
            break;
        }
    }

    let candidate = (0..n)
        .max_by(|&a, &b| pi[a].total_cmp(&pi[b]))
        .expect("non-empty chain");
    let reaches = chain.ancestors(candidate);
    if (0..n).any(|s| scope[s] && !reaches[s]) {
        return Err(SolverError::Reducible {
            classes: closed_classes(chain, &scope),
        });
    }
    if !converged && in_scope <= DIRECT_SOLVE_MAX_STATES {
        if let Some(direct) = direct_solve(chain, &scope) {
            pi = direct;
        }
    }
    let residual = residual_inf(chain, &pi);
    if residual > 1e-8 {
        return Err(SolverError::SteadyStateNotConverged(residual));
    }
    Ok(SteadyState {
        pi,
        residual,
        iterations,
    })
}

/// π with π = πP and Σπ = 1. The whole chain must have one closed class.
pub fn steady_state(chain: &dyn Chain) -> Result<SteadyState, SolverError> {
    solve_stationary(chain, None)
}

/// Like [`steady_state`], restricted to the states reachable from `root`.
pub fn steady_state_from(chain: &dyn Chain, root: usize) -> Result<SteadyState, SolverError> {
    solve_stationary(chain, Some(root))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Accepted share of arrival epochs.
    pub acceptance_prob: f64,
    pub blocking_prob: f64,
    /// Σ_s π(s)·r(s, d(s)).
    pub avg_reward_per_transition: f64,
    /// Σ_s π(s)·r(s, d(s)) / Σ_s π(s)/γ(s, d(s)).
    pub avg_reward_per_time: f64,
}

pub fn metrics(
    space: &StateSpace,
    kernel: &Kernel,
    rewards: &RewardTable,
    policy: &Policy,
    steady: &SteadyState,
) -> Result<Metrics, SolverError> {
    let mut arrival_mass = 0.0;
    let mut accepted_mass = 0.0;
    let mut reward = 0.0;
    let mut time = 0.0;
    for (s, &p) in steady.pi.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row = policy.row(s);
        if space.event(s) == Event::Arrival {
            arrival_mass += p;
            if kernel.action(row).is_accept() {
                accepted_mass += p;
            }
        }
        reward += p * rewards.discounted[row];
        time += p / kernel.gamma(row);
    }
    if arrival_mass <= 0.0 {
        return Err(SolverError::NoArrivalMass);
    }
    let acceptance_prob = (accepted_mass / arrival_mass).clamp(0.0, 1.0);
    Ok(Metrics {
        acceptance_prob,
        blocking_prob: 1.0 - acceptance_prob,
        avg_reward_per_transition: reward,
        avg_reward_per_time: reward / time,
    })
}

const HASH_PREFIX: &str = "# state_space_hash=";

/// Writes `<state>\t<action>\t<value>` per state after a hash header line.
pub fn write_policy<W: Write>(
    mut out: W,
    space: &StateSpace,
    kernel: &Kernel,
    policy: &Policy,
    values: &ValueVector,
) -> std::io::Result<()> {
    writeln!(out, "{HASH_PREFIX}{}", space.digest())?;
    for s in 0..space.len() {
        writeln!(
            out,
            "{}\t{}\t{}",
            space.encode(s),
            policy.action(kernel, s),
            values.0[s]
        )?;
    }
    Ok(())
}

/// Reads a policy dump, refusing dumps made for another state space.
pub fn read_policy<R: BufRead>(
    input: R,
    space: &StateSpace,
    kernel: &Kernel,
) -> Result<Policy, SolverError> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| SolverError::PolicyDump("empty file".into()))??;
    let found = header
        .strip_prefix(HASH_PREFIX)
        .ok_or_else(|| SolverError::PolicyDump("missing state-space hash header".into()))?
        .trim()
        .to_string();
    let expected = space.digest();
    if found != expected {
        return Err(SolverError::HashMismatch { expected, found });
    }
    let mut rows = vec![u32::MAX; space.len()];
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(state), Some(action)) = (fields.next(), fields.next()) else {
            return Err(SolverError::PolicyDump(format!(
                "line {}: too few fields",
                n + 2
            )));
        };
        let state: SystemState = state.parse()?;
        let action: Action = action.parse()?;
        let s = space
            .index_of(&state)
            .ok_or_else(|| SolverError::PolicyDump(format!("unknown state {state}")))?;
        let row = kernel.find_row(s, &action).ok_or_else(|| {
            SolverError::PolicyDump(format!("action {action} infeasible in {state}"))
        })?;
        rows[s] = row as u32;
    }
    if let Some(s) = rows.iter().position(|&r| r == u32::MAX) {
        return Err(SolverError::PolicyDump(format!(
            "no action for state {}",
            space.encode(s)
        )));
    }
    Ok(Policy {
        rows,
        meta: PolicyMeta::default(),
    })
}
