//! Dense reference solvers shared by the integration suites.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use ris_smdp::dynamics::{apply_action, successors};
use ris_smdp::state_space::{enumerate_states_with_cap, feasible_actions};
use ris_smdp::{Action, ScenarioConfig, StateSpace};

/// One uniformized row built straight from the model definitions.
pub struct DenseRow {
    pub action: Action,
    pub reward: f64,
    pub probs: Vec<(usize, f64)>,
}

pub struct DenseModel {
    pub space: StateSpace,
    pub rho: f64,
    pub discount: f64,
    pub rows: Vec<Vec<DenseRow>>,
}

fn lump(action: &Action, cfg: &ScenarioConfig) -> f64 {
    let e = &cfg.econ;
    match action {
        Action::Accept { blocks, .. } => e.income_q - e.transmit_z / *blocks as f64,
        Action::Transfer(t) => {
            -e.penalty_eps * t.records().map(|r| r.blocks * r.count).sum::<u32>() as f64
        }
        _ => 0.0,
    }
}

pub fn dense_model(cfg: &ScenarioConfig) -> DenseModel {
    let space = enumerate_states_with_cap(cfg, 1 << 16).unwrap();
    let alpha = cfg.econ.discount_alpha;
    let mut raw = Vec::new();
    let mut rho: f64 = 0.0;
    for s in 0..space.len() {
        let state = space.state(s);
        let mut rows = Vec::new();
        for action in feasible_actions(&state, cfg) {
            let row = successors(s, &action, &space, cfg).unwrap();
            let post = apply_action(&state, &action, cfg).unwrap();
            let occupied: u32 = post
                .occupancy
                .iter()
                .map(|d| {
                    d.iter()
                        .enumerate()
                        .map(|(k, n)| (k as u32 + 1) * n)
                        .sum::<u32>()
                })
                .sum();
            let holding = cfg.econ.hold_c * occupied as f64;
            let r = lump(&action, cfg) - holding / (alpha + row.gamma);
            rho = rho.max(row.gamma);
            rows.push((action, r, row.gamma, row.successors));
        }
        raw.push(rows);
    }
    let rows = raw
        .into_iter()
        .enumerate()
        .map(|(s, rows)| {
            rows.into_iter()
                .map(|(action, r, gamma, succ)| {
                    let mut probs: Vec<(usize, f64)> =
                        succ.iter().map(|&(t, p)| (t, p * gamma / rho)).collect();
                    probs.push((s, 1.0 - gamma / rho));
                    DenseRow {
                        action,
                        reward: r * (gamma + alpha) / (rho + alpha),
                        probs,
                    }
                })
                .collect()
        })
        .collect();
    DenseModel {
        space,
        rho,
        discount: rho / (rho + alpha),
        rows,
    }
}

/// Exact value of a fixed row choice: (I − λ̄P_d)⁻¹ r_d.
pub fn evaluate_choice(model: &DenseModel, choice: &[usize]) -> Vec<f64> {
    let n = model.space.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 0..n {
        let row = &model.rows[s][choice[s]];
        b[s] = row.reward;
        for &(t, p) in &row.probs {
            a[(s, t)] -= model.discount * p;
        }
    }
    let v = a.lu().solve(&b).expect("I − λ̄P is nonsingular");
    v.iter().copied().collect()
}

/// Policy iteration with exact evaluation; returns (values, row choice).
pub fn policy_iteration(model: &DenseModel) -> (Vec<f64>, Vec<usize>) {
    let n = model.space.len();
    let mut choice = vec![0usize; n];
    loop {
        let v = evaluate_choice(model, &choice);
        let mut changed = false;
        for s in 0..n {
            let q = |r: &DenseRow| {
                r.reward + model.discount * r.probs.iter().map(|&(t, p)| p * v[t]).sum::<f64>()
            };
            let current = q(&model.rows[s][choice[s]]);
            let (best, best_q) = model.rows[s]
                .iter()
                .enumerate()
                .map(|(i, r)| (i, q(r)))
                .fold((choice[s], current), |acc, x| {
                    if x.1 > acc.1 + 1e-10 {
                        x
                    } else {
                        acc
                    }
                });
            if best != choice[s] && best_q > current + 1e-10 {
                choice[s] = best;
                changed = true;
            }
        }
        if !changed {
            return (v, choice);
        }
    }
}

/// Stationary blocking of an M/M/N/N loss system by detailed balance.
pub fn loss_system_blocking(servers: u32, lambda: f64, mu: f64) -> f64 {
    let mut weights = vec![1.0f64];
    for n in 1..=servers {
        let prev = weights[n as usize - 1];
        weights.push(prev * lambda / (n as f64 * mu));
    }
    weights[servers as usize] / weights.iter().sum::<f64>()
}

/// Small instances whose state spaces stay at or below 200 states.
pub fn small_instances() -> Vec<(String, ScenarioConfig)> {
    let mut out = Vec::new();
    for (blocks, k) in [
        (vec![1], 1),
        (vec![2], 1),
        (vec![3], 1),
        (vec![4], 1),
        (vec![5], 1),
        (vec![2], 2),
        (vec![3], 2),
        (vec![1, 1], 1),
        (vec![2, 1], 1),
        (vec![4], 2),
    ] {
        for (lambda_s, mu_m) in [(1.0, 0.01), (5.0, 0.2), (10.0, 0.5)] {
            let cfg = ScenarioConfig::with_blocks(&blocks, k)
                .with_lambda_s(lambda_s)
                .with_mu_m(mu_m);
            out.push((format!("{blocks:?} K={k} λs={lambda_s} μm={mu_m}"), cfg));
        }
    }
    out
}
