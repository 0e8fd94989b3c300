//! Lump incomes, holding costs, the discounted one-step reward and the
//! uniformization of the SMDP into a discrete-time problem.

use thiserror::Error;

use crate::dynamics::{Kernel, KernelRow};
use crate::scenario::Economics;
use crate::state_space::{Action, Configuration, StateSpace};

#[derive(Debug, Error)]
pub enum UniformizationError {
    #[error("uniformization constant {rho} is below γ = {gamma} of state {state}")]
    RateAboveConstant { rho: f64, gamma: f64, state: usize },
    #[error("uniformization constant must be finite and positive, got {0}")]
    BadConstant(f64),
}

/// w(s,a): R_k = Q − Z/k on acceptance, −ε per relocated block on a
/// failure, nothing otherwise.
pub fn lump_income(action: &Action, econ: &Economics) -> f64 {
    match action {
        Action::Accept { blocks, .. } => econ.income_q - econ.transmit_z / *blocks as f64,
        Action::Transfer(t) => -econ.penalty_eps * t.transferred_blocks() as f64,
        Action::Reject | Action::Update => 0.0,
    }
}

/// c(s,a) on the post-action configuration: c · Σ_i Σ_k k·δ̂_k(r_i).
pub fn holding_cost_rate(post: &Configuration, hold_c: f64) -> f64 {
    hold_c * post.total_occupied_blocks() as f64
}

/// r(s,a) = w − c/(α + γ): the holding cost is discounted over an
/// exponential sojourn of rate γ.
pub fn discounted_reward(lump: f64, holding_rate: f64, alpha: f64, gamma: f64) -> f64 {
    lump - holding_rate / (alpha + gamma)
}

/// r̄ = r·(γ + α)/(ρ + α).
pub fn uniformized_reward(reward: f64, gamma: f64, alpha: f64, rho: f64) -> f64 {
    reward * (gamma + alpha) / (rho + alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardRow {
    pub lump: f64,
    pub holding_rate: f64,
    pub discounted: f64,
    pub uniformized: f64,
}

/// Per-kernel-row w, c and r.
#[derive(Debug, Clone)]
pub struct RewardTable {
    pub lump: Vec<f64>,
    pub holding_rate: Vec<f64>,
    pub discounted: Vec<f64>,
    alpha: f64,
}

impl RewardTable {
    pub fn build(space: &StateSpace, kernel: &Kernel, econ: &Economics) -> RewardTable {
        let config_holding: Vec<f64> = (0..space.num_configs())
            .map(|c| holding_cost_rate(&space.config(c), econ.hold_c))
            .collect();
        let rows = kernel.num_rows();
        let mut lump = Vec::with_capacity(rows);
        let mut holding_rate = Vec::with_capacity(rows);
        let mut discounted = Vec::with_capacity(rows);
        for row in 0..rows {
            let w = lump_income(&kernel.action(row), econ);
            let c = config_holding[kernel.post_config(row)];
            lump.push(w);
            holding_rate.push(c);
            discounted.push(discounted_reward(
                w,
                c,
                econ.discount_alpha,
                kernel.gamma(row),
            ));
        }
        RewardTable {
            lump,
            holding_rate,
            discounted,
            alpha: econ.discount_alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Uniformized model: constant ρ, discount λ̄ = ρ/(ρ+α) and r̄ per row.
/// Transition structure stays in the [`Kernel`].
#[derive(Debug, Clone)]
pub struct UniformizedModel {
    pub rho: f64,
    pub discount: f64,
    pub alpha: f64,
    pub rbar: Vec<f64>,
}

/// Uniformizes with ρ = max γ(s,a).
pub fn uniformize(
    kernel: &Kernel,
    rewards: &RewardTable,
) -> Result<UniformizedModel, UniformizationError> {
    uniformize_with(kernel, rewards, kernel.max_gamma())
}

pub fn uniformize_with(
    kernel: &Kernel,
    rewards: &RewardTable,
    rho: f64,
) -> Result<UniformizedModel, UniformizationError> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(UniformizationError::BadConstant(rho));
    }
    for s in 0..kernel.num_states() {
        for row in kernel.rows_of(s) {
            let gamma = kernel.gamma(row);
            if gamma > rho {
                return Err(UniformizationError::RateAboveConstant {
                    rho,
                    gamma,
                    state: s,
                });
            }
        }
    }
    let alpha = rewards.alpha();
    let rbar = (0..kernel.num_rows())
        .map(|row| uniformized_reward(rewards.discounted[row], kernel.gamma(row), alpha, rho))
        .collect();
    Ok(UniformizedModel {
        rho,
        discount: rho / (rho + alpha),
        alpha,
        rbar,
    })
}

/// p̄(·|s,a) of one row: self-loop 1 − (1 − p(s|s,a))·γ/ρ, every other
/// successor p·γ/ρ. The self-loop entry is listed first when positive.
pub fn uniformize_row(row: &KernelRow, rho: f64) -> Result<Vec<(usize, f64)>, UniformizationError> {
    if row.gamma > rho {
        return Err(UniformizationError::RateAboveConstant {
            rho,
            gamma: row.gamma,
            state: row.state,
        });
    }
    let scale = row.gamma / rho;
    let p_self: f64 = row
        .successors
        .iter()
        .filter(|(s, _)| *s == row.state)
        .map(|x| x.1)
        .sum();
    let mut out = Vec::with_capacity(row.successors.len() + 1);
    let self_loop = 1.0 - (1.0 - p_self) * scale;
    if self_loop > 0.0 {
        out.push((row.state, self_loop));
    }
    out.extend(
        row.successors
            .iter()
            .filter(|(s, _)| *s != row.state)
            .map(|&(s, p)| (s, p * scale)),
    );
    Ok(out)
}

impl UniformizedModel {
    pub fn reward_row(&self, rewards: &RewardTable, row: usize) -> RewardRow {
        RewardRow {
            lump: rewards.lump[row],
            holding_rate: rewards.holding_rate[row],
            discounted: rewards.discounted[row],
            uniformized: self.rbar[row],
        }
    }

    /// Materialized p̄ row for audits.
    pub fn transition_row(
        &self,
        kernel: &Kernel,
        space: &StateSpace,
        state: usize,
        row: usize,
    ) -> Vec<(usize, f64)> {
        uniformize_row(&kernel.row(space, state, row), self.rho)
            .expect("ρ dominates every γ by construction")
    }
}
