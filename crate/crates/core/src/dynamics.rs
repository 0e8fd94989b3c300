//! Event rates, post-action updates, service transfer on block failure, and
//! the embedded-chain transition kernel.
//!
//! Rates are always evaluated on the post-action configuration, so the
//! ±kμ_s, ±μ^m and ±λ^m corrections of each transition case fall out of the
//! same formula. A successor of `(s, a)` is the post-action configuration
//! paired with any event that can fire next, with probability rate/γ.

use crate::scenario::ScenarioConfig;
use crate::state_space::{
    feasible_actions, Action, Configuration, Event, ModelError, StateSpace, SystemState,
    TransferVector,
};

/// Which service, if any, must move to the backup when a block
/// of main RIS `ris` fails.
///
/// After the failure `X − 1` blocks keep working. If the pair holds more
/// occupied blocks than that, the smallest-k service present is relocated.
pub fn transfer_vector(config: &Configuration, ris: usize) -> TransferVector {
    let remaining = config.availability[ris].saturating_sub(1);
    if config.occupied_blocks(ris) <= remaining {
        return TransferVector::empty();
    }
    match (1..=config.max_blocks()).find(|&k| config.services(ris, k) > 0) {
        Some(blocks) => TransferVector::single(ris, blocks),
        None => TransferVector::empty(),
    }
}

fn infeasible(state: &SystemState, action: &Action) -> ModelError {
    ModelError::InfeasibleAction {
        state: state.to_string(),
        action: action.to_string(),
    }
}

/// Post-action configuration (Δ̂, X̂).
///
/// A transfer leaves Δ untouched: the relocated service still belongs to
/// pair i and keeps departing at the same rate.
pub fn apply_action(
    state: &SystemState,
    action: &Action,
    cfg: &ScenarioConfig,
) -> Result<Configuration, ModelError> {
    if !feasible_actions(state, cfg).contains(action) {
        return Err(infeasible(state, action));
    }
    Ok(apply_unchecked(state, action))
}

/// [`apply_action`] without the feasibility check.
pub(crate) fn apply_unchecked(state: &SystemState, action: &Action) -> Configuration {
    let mut next = state.config.clone();
    match (state.event, action) {
        (Event::Arrival, Action::Accept { ris, blocks }) => *next.services_mut(*ris, *blocks) += 1,
        (Event::Departure { ris, blocks }, Action::Update) => *next.services_mut(ris, blocks) -= 1,
        (Event::BlockReturn { ris }, Action::Update) => next.availability[ris] += 1,
        (Event::BlockFailure { ris }, Action::Transfer(_)) => next.availability[ris] -= 1,
        _ => {}
    }
    next
}

/// Every competing exponential clock of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBundle {
    pub arrival: f64,
    /// (ris, blocks, k·δ_k(r_i)·μ_s) for each non-empty class.
    pub departures: Vec<(usize, u32, f64)>,
    /// (ris, μ^m·X^{r_i}) for each RIS with a working block.
    pub failures: Vec<(usize, f64)>,
    /// (ris, λ^m·(N(i) − X^{r_i})) for each RIS with a failed block.
    pub returns: Vec<(usize, f64)>,
    /// γ: sum of every listed rate.
    pub total: f64,
    available_blocks: u32,
}

impl RateBundle {
    /// β(s) = Σ_i X^{r_i}.
    pub fn beta(&self) -> u32 {
        self.available_blocks
    }

    /// Θ, the aggregate departure rate.
    pub fn departure_total(&self) -> f64 {
        self.departures.iter().map(|d| d.2).sum()
    }

    /// Mean sojourn τ = 1/γ.
    pub fn mean_sojourn(&self) -> f64 {
        1.0 / self.total
    }

    /// (event, rate) pairs in canonical state-space event order. Zero-rate
    /// entries are kept; callers drop them when building successors.
    pub fn events(&self) -> Vec<(Event, f64)> {
        let mut out = Vec::with_capacity(1 + self.departures.len() + 2 * self.failures.len());
        out.push((Event::Arrival, self.arrival));
        out.extend(
            self.departures
                .iter()
                .map(|&(ris, blocks, rate)| (Event::Departure { ris, blocks }, rate)),
        );
        out.extend(
            self.failures
                .iter()
                .map(|&(ris, rate)| (Event::BlockFailure { ris }, rate)),
        );
        out.extend(
            self.returns
                .iter()
                .map(|&(ris, rate)| (Event::BlockReturn { ris }, rate)),
        );
        out
    }
}

pub fn event_rates(config: &Configuration, cfg: &ScenarioConfig) -> RateBundle {
    let rates = &cfg.rates;
    let mut departures = Vec::new();
    let mut failures = Vec::new();
    let mut returns = Vec::new();
    for ris in 0..cfg.num_ris() {
        for blocks in 1..=cfg.max_blocks_k {
            let n = config.services(ris, blocks);
            if n > 0 {
                departures.push((ris, blocks, (blocks * n) as f64 * rates.mu_s));
            }
        }
    }
    for ris in 0..cfg.num_ris() {
        let working = config.availability[ris];
        if working >= 1 {
            failures.push((ris, rates.mu_m * working as f64));
        }
    }
    for ris in 0..cfg.num_ris() {
        let failed = cfg.block_count(ris) - config.availability[ris];
        if failed >= 1 {
            returns.push((ris, rates.lambda_m * failed as f64));
        }
    }
    let mut total = rates.lambda_s;
    total += departures.iter().map(|d| d.2).sum::<f64>();
    total += failures.iter().map(|f| f.1).sum::<f64>();
    total += returns.iter().map(|r| r.1).sum::<f64>();
    RateBundle {
        arrival: rates.lambda_s,
        departures,
        failures,
        returns,
        total,
        available_blocks: config.available_blocks(),
    }
}

/// Upper bound on γ over the whole model.
pub fn gamma_bound(cfg: &ScenarioConfig) -> f64 {
    let blocks = cfg.total_blocks() as f64;
    cfg.rates.lambda_s
        + (cfg.rates.lambda_m + cfg.rates.mu_m) * blocks
        + cfg.rates.mu_s * cfg.max_blocks_k as f64 * blocks
}

/// p(·|s,a) for one state-action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub state: usize,
    pub action: Action,
    /// (successor index, probability), probabilities strictly positive.
    pub successors: Vec<(usize, f64)>,
    /// Sojourn rate γ(s,a).
    pub gamma: f64,
}

impl KernelRow {
    pub fn probability_sum(&self) -> f64 {
        self.successors.iter().map(|s| s.1).sum()
    }
}

/// Builds p(·|s,a) directly from the model definitions.
pub fn successors(
    state: usize,
    action: &Action,
    space: &StateSpace,
    cfg: &ScenarioConfig,
) -> Result<KernelRow, ModelError> {
    let current = space.state(state);
    let post = apply_action(&current, action, cfg)?;
    let bundle = event_rates(&post, cfg);
    let mut out = Vec::new();
    for (event, rate) in bundle.events() {
        if rate <= 0.0 {
            continue;
        }
        let next = post.clone().with_event(event);
        let idx = space
            .index_of(&next)
            .ok_or_else(|| ModelError::MissingSuccessor(next.to_string()))?;
        out.push((idx, rate / bundle.total));
    }
    Ok(KernelRow {
        state,
        action: *action,
        successors: out,
        gamma: bundle.total,
    })
}

/// The full embedded-chain kernel in factored form.
///
/// Successors of a row depend only on its post-action configuration, so
/// they are stored once per configuration: the states of configuration `c`
/// are the candidate successors, each weighted by the rate of its own event.
#[derive(Debug, Clone)]
pub struct Kernel {
    config_gamma: Vec<f64>,
    state_rate: Vec<f64>,
    row_start: Vec<u32>,
    row_action: Vec<Action>,
    row_post: Vec<u32>,
    max_gamma: f64,
}

impl Kernel {
    pub fn build(space: &StateSpace, cfg: &ScenarioConfig) -> Result<Kernel, ModelError> {
        let mut config_gamma = Vec::with_capacity(space.num_configs());
        let mut state_rate = vec![0.0; space.len()];
        for c in 0..space.num_configs() {
            let bundle = event_rates(&space.config(c), cfg);
            let range = space.states_of_config(c);
            let events = bundle.events();
            // canonical order is shared with the enumeration
            debug_assert_eq!(events.len(), range.len());
            for (s, (event, rate)) in range.zip(events) {
                debug_assert_eq!(space.event(s), event);
                state_rate[s] = rate;
            }
            config_gamma.push(bundle.total);
        }

        let mut row_start = Vec::with_capacity(space.len() + 1);
        let mut row_action = Vec::with_capacity(space.len());
        let mut row_post = Vec::with_capacity(space.len());
        let mut max_gamma: f64 = 0.0;
        for s in 0..space.len() {
            row_start.push(row_action.len() as u32);
            let state = space.state(s);
            for action in feasible_actions(&state, cfg) {
                let post = apply_unchecked(&state, &action);
                let post_id = space
                    .config_id(&post)
                    .ok_or_else(|| ModelError::MissingSuccessor(format!("{post:?}")))?;
                max_gamma = max_gamma.max(config_gamma[post_id]);
                row_action.push(action);
                row_post.push(post_id as u32);
            }
        }
        row_start.push(row_action.len() as u32);
        debug_assert!(max_gamma <= gamma_bound(cfg) * (1.0 + 1e-12));
        Ok(Kernel {
            config_gamma,
            state_rate,
            row_start,
            row_action,
            row_post,
            max_gamma,
        })
    }

    pub fn num_states(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.row_action.len()
    }

    /// Global row ids of state `s`, in tie-break order.
    pub fn rows_of(&self, s: usize) -> std::ops::Range<usize> {
        self.row_start[s] as usize..self.row_start[s + 1] as usize
    }

    /// Offsets of every state's first row, plus the total.
    pub fn row_starts(&self) -> &[u32] {
        &self.row_start
    }

    pub fn action(&self, row: usize) -> Action {
        self.row_action[row]
    }

    pub fn post_config(&self, row: usize) -> usize {
        self.row_post[row] as usize
    }

    /// γ(s,a) of a row.
    pub fn gamma(&self, row: usize) -> f64 {
        self.config_gamma[self.row_post[row] as usize]
    }

    pub fn config_gamma(&self, config_id: usize) -> f64 {
        self.config_gamma[config_id]
    }

    /// Rate of the event carried by state `s` within its configuration.
    pub fn state_rate(&self, s: usize) -> f64 {
        self.state_rate[s]
    }

    pub fn state_rates(&self) -> &[f64] {
        &self.state_rate
    }

    pub fn config_gammas(&self) -> &[f64] {
        &self.config_gamma
    }

    pub fn row_posts(&self) -> &[u32] {
        &self.row_post
    }

    /// max γ(s,a) over every row; the uniformization constant.
    pub fn max_gamma(&self) -> f64 {
        self.max_gamma
    }

    /// Row id of `action` in state `s`.
    pub fn find_row(&self, s: usize, action: &Action) -> Option<usize> {
        self.rows_of(s).find(|&row| self.row_action[row] == *action)
    }

    /// Iterates (successor, probability) of a row.
    pub fn successors_of<'a>(
        &'a self,
        space: &'a StateSpace,
        row: usize,
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        let post = self.row_post[row] as usize;
        let gamma = self.config_gamma[post];
        space
            .states_of_config(post)
            .filter(move |&s| self.state_rate[s] > 0.0)
            .map(move |s| (s, self.state_rate[s] / gamma))
    }

    pub fn row(&self, space: &StateSpace, state: usize, row: usize) -> KernelRow {
        KernelRow {
            state,
            action: self.row_action[row],
            successors: self.successors_of(space, row).collect(),
            gamma: self.gamma(row),
        }
    }

    /// Audit dump: `state_idx,action,succ_idx,prob,gamma`.
    pub fn write_csv<W: std::io::Write>(
        &self,
        space: &StateSpace,
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "state_idx,action,succ_idx,prob,gamma")?;
        for s in 0..self.num_states() {
            for row in self.rows_of(s) {
                let gamma = self.gamma(row);
                for (succ, p) in self.successors_of(space, row) {
                    writeln!(out, "{s},{},{succ},{p},{gamma}", self.row_action[row])?;
                }
            }
        }
        Ok(())
    }
}
