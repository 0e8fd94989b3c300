//! SMDP states, events and actions, and enumeration of the state space.
//!
//! A state is a configuration (occupancy matrix Δ and availability vector X)
//! together with the event that triggered the current decision epoch.
//! Occupancy counts every service of a RIS pair regardless of whether it is
//! hosted on the main RIS or was relocated to the backup; it may exceed the
//! number of working main blocks after failures but never the pair size.
//!
//! RIS indices are 0-based in the API and 1-based in every text encoding.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::transfer_vector;
use crate::scenario::ScenarioConfig;

/// Default upper bound on |S|.
pub const DEFAULT_STATE_CAP: usize = 1 << 26;
/// Environment variable overriding [`DEFAULT_STATE_CAP`].
pub const STATE_CAP_ENV: &str = "RIS_SMDP_STATE_CAP";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("state space has {states} states, above the cap of {cap}")]
    StateCapExceeded { states: u128, cap: usize },
    #[error("RIS block count {0} is too large for the packed state layout")]
    BlocksTooLarge(u32),
    #[error("action {action} is not feasible in state {state}")]
    InfeasibleAction { state: String, action: String },
    #[error("successor {0} is missing from the state space")]
    MissingSuccessor(String),
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

fn parse_err(input: &str, reason: impl Into<String>) -> ModelError {
    ModelError::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// State cap from [`STATE_CAP_ENV`], falling back to [`DEFAULT_STATE_CAP`].
pub fn state_cap_from_env() -> usize {
    std::env::var(STATE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_STATE_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    Arrival,
    /// Completion of a service holding `blocks` blocks of pair `ris`.
    Departure {
        ris: usize,
        blocks: u32,
    },
    BlockFailure {
        ris: usize,
    },
    BlockReturn {
        ris: usize,
    },
}

impl Event {
    pub fn is_arrival(self) -> bool {
        matches!(self, Event::Arrival)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Event::Arrival => write!(f, "Ar"),
            Event::Departure { ris, blocks } => write!(f, "D({},{})", ris + 1, blocks),
            Event::BlockFailure { ris } => write!(f, "F({})", ris + 1),
            Event::BlockReturn { ris } => write!(f, "Re({})", ris + 1),
        }
    }
}

fn parse_index(input: &str, text: &str) -> Result<usize, ModelError> {
    let v: usize = text
        .trim()
        .parse()
        .map_err(|_| parse_err(input, format!("bad index `{text}`")))?;
    if v == 0 {
        return Err(parse_err(input, "indices are 1-based"));
    }
    Ok(v - 1)
}

fn strip_call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')
}

impl FromStr for Event {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "Ar" {
            return Ok(Event::Arrival);
        }
        if let Some(args) = strip_call(s, "D") {
            let (i, k) = args
                .split_once(',')
                .ok_or_else(|| parse_err(s, "expected D(i,k)"))?;
            let blocks = k
                .trim()
                .parse()
                .map_err(|_| parse_err(s, "bad block count"))?;
            return Ok(Event::Departure {
                ris: parse_index(s, i)?,
                blocks,
            });
        }
        if let Some(args) = strip_call(s, "F") {
            return Ok(Event::BlockFailure {
                ris: parse_index(s, args)?,
            });
        }
        if let Some(args) = strip_call(s, "Re") {
            return Ok(Event::BlockReturn {
                ris: parse_index(s, args)?,
            });
        }
        Err(parse_err(s, "unknown event"))
    }
}

/// Occupancy matrix and availability vector, without the pending event.
/// Also used for post-action configurations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    /// `occupancy[i][k-1]` = number of k-block services of pair i.
    pub occupancy: Vec<Vec<u32>>,
    /// Working blocks of each main RIS.
    pub availability: Vec<u32>,
}

impl Configuration {
    /// Empty system with every block working.
    pub fn empty(cfg: &ScenarioConfig) -> Self {
        Configuration {
            occupancy: vec![vec![0; cfg.max_blocks_k as usize]; cfg.num_ris()],
            availability: cfg.block_counts(),
        }
    }

    pub fn num_ris(&self) -> usize {
        self.availability.len()
    }

    pub fn max_blocks(&self) -> u32 {
        self.occupancy.first().map_or(0, |row| row.len() as u32)
    }

    /// δ_k(r_i) with 1-based `blocks`.
    pub fn services(&self, ris: usize, blocks: u32) -> u32 {
        self.occupancy[ris][blocks as usize - 1]
    }

    pub fn services_mut(&mut self, ris: usize, blocks: u32) -> &mut u32 {
        &mut self.occupancy[ris][blocks as usize - 1]
    }

    /// Σ_k k·δ_k(r_i).
    pub fn occupied_blocks(&self, ris: usize) -> u32 {
        self.occupancy[ris]
            .iter()
            .enumerate()
            .map(|(k, &n)| (k as u32 + 1) * n)
            .sum()
    }

    pub fn total_occupied_blocks(&self) -> u32 {
        (0..self.num_ris()).map(|i| self.occupied_blocks(i)).sum()
    }

    pub fn total_services(&self) -> u32 {
        self.occupancy.iter().flatten().sum()
    }

    /// β(s): working blocks over all main RISs.
    pub fn available_blocks(&self) -> u32 {
        self.availability.iter().sum()
    }

    pub fn with_event(self, event: Event) -> SystemState {
        SystemState {
            config: self,
            event,
        }
    }

    /// Checks capacity and availability bounds against the fleet.
    pub fn is_valid(&self, block_counts: &[u32]) -> bool {
        self.num_ris() == block_counts.len()
            && self.occupancy.len() == block_counts.len()
            && (0..self.num_ris()).all(|i| {
                self.occupied_blocks(i) <= block_counts[i]
                    && self.availability[i] <= block_counts[i]
            })
    }

    /// Whether `event` can be pending in this configuration.
    pub fn admits_event(&self, event: Event, block_counts: &[u32]) -> bool {
        match event {
            Event::Arrival => true,
            Event::Departure { ris, blocks } => {
                ris < self.num_ris()
                    && blocks >= 1
                    && blocks <= self.max_blocks()
                    && self.services(ris, blocks) >= 1
            }
            Event::BlockFailure { ris } => ris < self.num_ris() && self.availability[ris] >= 1,
            Event::BlockReturn { ris } => {
                ris < self.num_ris() && self.availability[ris] < block_counts[ris]
            }
        }
    }

    /// Every feasible event in canonical order: arrival, departures by
    /// (ris, blocks), failures by ris, returns by ris.
    pub fn feasible_events(&self, block_counts: &[u32]) -> Vec<Event> {
        let r = self.num_ris();
        let mut events = vec![Event::Arrival];
        for ris in 0..r {
            for blocks in 1..=self.max_blocks() {
                if self.services(ris, blocks) >= 1 {
                    events.push(Event::Departure { ris, blocks });
                }
            }
        }
        for ris in 0..r {
            if self.availability[ris] >= 1 {
                events.push(Event::BlockFailure { ris });
            }
        }
        for (ris, (&x, &n)) in self.availability.iter().zip(block_counts).enumerate() {
            if x < n {
                events.push(Event::BlockReturn { ris });
            }
        }
        events
    }
}

/// The SMDP state s = (Δ, X, e).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemState {
    pub config: Configuration,
    pub event: Event,
}

impl SystemState {
    pub fn occupancy(&self) -> &[Vec<u32>] {
        &self.config.occupancy
    }

    pub fn availability(&self) -> &[u32] {
        &self.config.availability
    }

    pub fn is_valid(&self, block_counts: &[u32]) -> bool {
        self.config.is_valid(block_counts) && self.config.admits_event(self.event, block_counts)
    }
}

/// `d[i][k]=..;x[i]=..;e=..` with 1-based indices.
impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.config.occupancy.iter().enumerate() {
            for (k, n) in row.iter().enumerate() {
                write!(f, "d[{}][{}]={};", i + 1, k + 1, n)?;
            }
        }
        for (i, x) in self.config.availability.iter().enumerate() {
            write!(f, "x[{}]={};", i + 1, x)?;
        }
        write!(f, "e={}", self.event)
    }
}

impl FromStr for SystemState {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut occ: Vec<(usize, usize, u32)> = Vec::new();
        let mut avail: Vec<(usize, u32)> = Vec::new();
        let mut event = None;
        for field in s.split(';') {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| parse_err(s, format!("field `{field}` has no `=`")))?;
            if key == "e" {
                event = Some(value.parse()?);
                continue;
            }
            let n: u32 = value
                .parse()
                .map_err(|_| parse_err(s, format!("bad count `{value}`")))?;
            if let Some(rest) = key.strip_prefix("d[") {
                let (i, rest) = rest
                    .split_once("][")
                    .ok_or_else(|| parse_err(s, "expected d[i][k]"))?;
                let k = rest
                    .strip_suffix(']')
                    .ok_or_else(|| parse_err(s, "expected d[i][k]"))?;
                occ.push((parse_index(s, i)?, parse_index(s, k)?, n));
            } else if let Some(rest) = key.strip_prefix("x[") {
                let i = rest
                    .strip_suffix(']')
                    .ok_or_else(|| parse_err(s, "expected x[i]"))?;
                avail.push((parse_index(s, i)?, n));
            } else {
                return Err(parse_err(s, format!("unknown key `{key}`")));
            }
        }
        let event = event.ok_or_else(|| parse_err(s, "missing event"))?;
        let r = avail.len();
        if r == 0 || !occ.len().is_multiple_of(r) {
            return Err(parse_err(s, "inconsistent matrix shape"));
        }
        let k = occ.len() / r;
        let mut occupancy = vec![vec![0; k]; r];
        let mut seen = vec![vec![false; k]; r];
        for (i, kk, n) in occ {
            if i >= r || kk >= k || seen[i][kk] {
                return Err(parse_err(s, "inconsistent matrix shape"));
            }
            seen[i][kk] = true;
            occupancy[i][kk] = n;
        }
        let mut availability = vec![0; r];
        let mut seen = vec![false; r];
        for (i, n) in avail {
            if i >= r || seen[i] {
                return Err(parse_err(s, "inconsistent availability vector"));
            }
            seen[i] = true;
            availability[i] = n;
        }
        Ok(SystemState {
            config: Configuration {
                occupancy,
                availability,
            },
            event,
        })
    }
}

/// One relocated service class: `count` services of `blocks` blocks moved
/// from main RIS `ris` to its backup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransferRecord {
    pub ris: usize,
    pub blocks: u32,
    pub count: u32,
}

/// Transfer vector T. A single block failure moves at most one service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TransferVector {
    record: Option<TransferRecord>,
}

impl TransferVector {
    pub fn empty() -> Self {
        TransferVector { record: None }
    }

    pub fn single(ris: usize, blocks: u32) -> Self {
        TransferVector {
            record: Some(TransferRecord {
                ris,
                blocks,
                count: 1,
            }),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.record.is_none()
    }

    pub fn records(&self) -> impl Iterator<Item = TransferRecord> + '_ {
        self.record.iter().copied()
    }

    /// Σ k·count over the records.
    pub fn transferred_blocks(&self) -> u32 {
        self.records().map(|r| r.blocks * r.count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Reject,
    /// Admit the request with `blocks` blocks on main RIS `ris`.
    Accept {
        ris: usize,
        blocks: u32,
    },
    /// Bookkeeping for departures and block returns.
    Update,
    Transfer(TransferVector),
}

impl Action {
    pub fn is_accept(&self) -> bool {
        matches!(self, Action::Accept { .. })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Reject => write!(f, "reject"),
            Action::Accept { ris, blocks } => write!(f, "accept({},{})", ris + 1, blocks),
            Action::Update => write!(f, "update"),
            Action::Transfer(t) => {
                write!(f, "transfer[")?;
                for (n, r) in t.records().enumerate() {
                    if n > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({},{},{})", r.ris + 1, r.blocks, r.count)?;
                }
                write!(f, "]")
            }
        }
    }
}

impl FromStr for Action {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reject" => return Ok(Action::Reject),
            "update" => return Ok(Action::Update),
            "transfer[]" => return Ok(Action::Transfer(TransferVector::empty())),
            _ => {}
        }
        if let Some(args) = strip_call(s, "accept") {
            let (i, k) = args
                .split_once(',')
                .ok_or_else(|| parse_err(s, "expected accept(i,k)"))?;
            let blocks = k.parse().map_err(|_| parse_err(s, "bad block count"))?;
            return Ok(Action::Accept {
                ris: parse_index(s, i)?,
                blocks,
            });
        }
        if let Some(inner) = s
            .strip_prefix("transfer[(")
            .and_then(|r| r.strip_suffix(")]"))
        {
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 3 {
                return Err(parse_err(s, "expected transfer[(i,k,count)]"));
            }
            let blocks = parts[1]
                .parse()
                .map_err(|_| parse_err(s, "bad block count"))?;
            let count: u32 = parts[2].parse().map_err(|_| parse_err(s, "bad count"))?;
            if count != 1 {
                return Err(parse_err(s, "a transfer moves exactly one service"));
            }
            return Ok(Action::Transfer(TransferVector::single(
                parse_index(s, parts[0])?,
                blocks,
            )));
        }
        Err(parse_err(s, "unknown action"))
    }
}

/// Headroom on working main-RIS blocks: max(0, X^{r_i} − Σ_k k·δ_k(r_i)).
pub fn free_capacity(config: &Configuration, ris: usize) -> u32 {
    config.availability[ris].saturating_sub(config.occupied_blocks(ris))
}

/// Feasible actions in tie-break order.
///
/// Arrivals offer `Reject` followed by every `Accept(i,k)` that fits the
/// working headroom of main RIS i, ordered by (i, k). Departures and returns
/// only allow `Update`; a failure allows exactly the transfer chosen by
/// [`crate::dynamics::transfer_vector`].
pub fn feasible_actions(state: &SystemState, cfg: &ScenarioConfig) -> Vec<Action> {
    match state.event {
        Event::Arrival => {
            let mut actions = vec![Action::Reject];
            for ris in 0..cfg.num_ris() {
                let free = free_capacity(&state.config, ris);
                for blocks in 1..=cfg.max_blocks_k {
                    if free >= blocks {
                        actions.push(Action::Accept { ris, blocks });
                    }
                }
            }
            actions
        }
        Event::Departure { .. } | Event::BlockReturn { .. } => vec![Action::Update],
        Event::BlockFailure { ris } => {
            vec![Action::Transfer(transfer_vector(&state.config, ris))]
        }
    }
}

/// Block-count vectors (δ_1..δ_K) with Σ k·δ_k ≤ n, lexicographic with δ_1
/// most significant.
fn occupancy_vectors(n: u32, k: u32) -> Vec<Vec<u32>> {
    fn rec(slot: u32, k: u32, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot > k {
            out.push(cur.clone());
            return;
        }
        for count in 0..=left / slot {
            cur.push(count);
            rec(slot + 1, k, left - count * slot, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, k, n, &mut Vec::with_capacity(k as usize), &mut out);
    out
}

/// Packed, immutable enumeration of every feasible (Δ, X, e).
///
/// Configurations are stored contiguously; the states of configuration `c`
/// occupy indices `config_start[c]..config_start[c+1]` in canonical event
/// order.
#[derive(Debug, Clone)]
pub struct StateSpace {
    block_counts: Vec<u32>,
    max_blocks: u32,
    width: usize,
    config_data: Vec<u16>,
    config_lookup: HashMap<u64, u32>,
    slot_mult: Vec<u64>,
    config_start: Vec<u32>,
    state_config: Vec<u32>,
    state_event: Vec<Event>,
}

/// Exact |S| computed from per-RIS aggregates, without enumerating.
pub fn count_states(cfg: &ScenarioConfig) -> u128 {
    let k = cfg.max_blocks_k;
    // per RIS: number of local configurations and total local event count
    let locals: Vec<(u128, u128)> = cfg
        .risses
        .iter()
        .map(|ris| {
            let n = ris.block_count;
            let vectors = occupancy_vectors(n, k);
            let configs = vectors.len() as u128 * (n as u128 + 1);
            let departures: u128 = vectors
                .iter()
                .map(|v| v.iter().filter(|&&c| c > 0).count() as u128)
                .sum::<u128>()
                * (n as u128 + 1);
            // failures need X >= 1, returns need X <= N-1: n of n+1 values each
            let avail_events = vectors.len() as u128 * 2 * n as u128;
            (configs, departures + avail_events)
        })
        .collect();
    let total_configs: u128 = locals.iter().map(|l| l.0).product();
    let mut states = total_configs; // arrivals
    for (i, &(_, events)) in locals.iter().enumerate() {
        let others: u128 = locals
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| l.0)
            .product();
        states += events * others;
    }
    states
}

/// Enumerates the state space with the cap from the environment.
pub fn enumerate_states(cfg: &ScenarioConfig) -> Result<StateSpace, ModelError> {
    enumerate_states_with_cap(cfg, state_cap_from_env())
}

pub fn enumerate_states_with_cap(
    cfg: &ScenarioConfig,
    cap: usize,
) -> Result<StateSpace, ModelError> {
    let expected = count_states(cfg);
    if expected > cap as u128 || expected > u32::MAX as u128 {
        return Err(ModelError::StateCapExceeded {
            states: expected,
            cap,
        });
    }
    let r = cfg.num_ris();
    let k = cfg.max_blocks_k;
    let block_counts = cfg.block_counts();
    if let Some(&n) = block_counts.iter().find(|&&n| n > u16::MAX as u32) {
        return Err(ModelError::BlocksTooLarge(n));
    }
    let width = r * k as usize + r;

    // mixed-radix multipliers: occupancy slots first, then availability
    let mut radices = Vec::with_capacity(width);
    for &n in &block_counts {
        for blocks in 1..=k {
            radices.push(n as u64 / blocks as u64 + 1);
        }
    }
    for &n in &block_counts {
        radices.push(n as u64 + 1);
    }
    let mut slot_mult = vec![0u64; width];
    let mut mult: u64 = 1;
    for slot in (0..width).rev() {
        slot_mult[slot] = mult;
        mult = mult
            .checked_mul(radices[slot])
            .ok_or(ModelError::StateCapExceeded {
                states: expected,
                cap,
            })?;
    }

    // local (δ vector, X) lists per RIS
    let locals: Vec<Vec<(Vec<u32>, u32)>> = block_counts
        .iter()
        .map(|&n| {
            occupancy_vectors(n, k)
                .into_iter()
                .flat_map(|v| (0..=n).map(move |x| (v.clone(), x)))
                .collect()
        })
        .collect();
    let num_configs: usize = locals.iter().map(Vec::len).product();

    let mut space = StateSpace {
        block_counts: block_counts.clone(),
        max_blocks: k,
        width,
        config_data: Vec::with_capacity(num_configs * width),
        config_lookup: HashMap::with_capacity(num_configs),
        slot_mult,
        config_start: Vec::with_capacity(num_configs + 1),
        state_config: Vec::with_capacity(expected as usize),
        state_event: Vec::with_capacity(expected as usize),
    };

    let mut digits = vec![0usize; r];
    for c in 0..num_configs {
        let config = Configuration {
            occupancy: (0..r).map(|i| locals[i][digits[i]].0.clone()).collect(),
            availability: (0..r).map(|i| locals[i][digits[i]].1).collect(),
        };
        let packed = space.pack(&config);
        space.config_lookup.insert(space.key_of(&packed), c as u32);
        space.config_data.extend_from_slice(&packed);
        space.config_start.push(space.state_event.len() as u32);
        for event in config.feasible_events(&block_counts) {
            space.state_config.push(c as u32);
            space.state_event.push(event);
        }
        // advance the mixed-radix counter, RIS 0 most significant
        for i in (0..r).rev() {
            digits[i] += 1;
            if digits[i] < locals[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
    space.config_start.push(space.state_event.len() as u32);
    debug_assert_eq!(space.state_event.len() as u128, expected);
    Ok(space)
}

impl StateSpace {
    fn pack(&self, config: &Configuration) -> Vec<u16> {
        let mut packed = Vec::with_capacity(self.width);
        for row in &config.occupancy {
            packed.extend(row.iter().map(|&n| n as u16));
        }
        packed.extend(config.availability.iter().map(|&x| x as u16));
        packed
    }

    fn key_of(&self, packed: &[u16]) -> u64 {
        packed
            .iter()
            .zip(&self.slot_mult)
            .map(|(&v, &m)| v as u64 * m)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.state_event.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_event.is_empty()
    }

    pub fn num_configs(&self) -> usize {
        self.config_start.len() - 1
    }

    pub fn num_ris(&self) -> usize {
        self.block_counts.len()
    }

    pub fn max_blocks(&self) -> u32 {
        self.max_blocks
    }

    pub fn block_counts(&self) -> &[u32] {
        &self.block_counts
    }

    pub fn config(&self, config_id: usize) -> Configuration {
        let r = self.num_ris();
        let k = self.max_blocks as usize;
        let packed = &self.config_data[config_id * self.width..(config_id + 1) * self.width];
        Configuration {
            occupancy: (0..r)
                .map(|i| {
                    packed[i * k..(i + 1) * k]
                        .iter()
                        .map(|&v| v as u32)
                        .collect()
                })
                .collect(),
            availability: packed[r * k..].iter().map(|&v| v as u32).collect(),
        }
    }

    pub fn config_id(&self, config: &Configuration) -> Option<usize> {
        if config.num_ris() != self.num_ris()
            || config
                .occupancy
                .iter()
                .any(|row| row.len() != self.max_blocks as usize)
            || !config.is_valid(&self.block_counts)
        {
            return None;
        }
        let packed = self.pack(config);
        self.config_lookup
            .get(&self.key_of(&packed))
            .map(|&c| c as usize)
    }

    /// State indices belonging to configuration `config_id`.
    pub fn states_of_config(&self, config_id: usize) -> Range<usize> {
        self.config_start[config_id] as usize..self.config_start[config_id + 1] as usize
    }

    /// Offsets of every configuration's first state, plus the total.
    pub fn config_starts(&self) -> &[u32] {
        &self.config_start
    }

    pub fn config_of(&self, state: usize) -> usize {
        self.state_config[state] as usize
    }

    pub fn event(&self, state: usize) -> Event {
        self.state_event[state]
    }

    pub fn state(&self, index: usize) -> SystemState {
        SystemState {
            config: self.config(self.config_of(index)),
            event: self.event(index),
        }
    }

    pub fn state_index(&self, config_id: usize, event: Event) -> Option<usize> {
        let range = self.states_of_config(config_id);
        self.state_event[range.clone()]
            .iter()
            .position(|&e| e == event)
            .map(|p| range.start + p)
    }

    pub fn index_of(&self, state: &SystemState) -> Option<usize> {
        self.state_index(self.config_id(&state.config)?, state.event)
    }

    /// Arrival state of the empty, fully-working system.
    pub fn empty_state(&self) -> usize {
        let config = Configuration {
            occupancy: vec![vec![0; self.max_blocks as usize]; self.num_ris()],
            availability: self.block_counts.clone(),
        };
        self.index_of(&config.with_event(Event::Arrival))
            .expect("empty state is always enumerated")
    }

    pub fn encode(&self, index: usize) -> String {
        self.state(index).to_string()
    }

    pub fn iter(&self) -> impl Iterator<Item = SystemState> + '_ {
        (0..self.len()).map(move |s| self.state(s))
    }

    /// Hex SHA-256 over the ordered state encodings, one per line.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for s in 0..self.len() {
            hasher.update(self.encode(s).as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
