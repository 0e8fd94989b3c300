//! Monte Carlo continuous-time simulation of the RIS system under a fixed
//! policy.
//!
//! Every active event class runs its own exponential clock (rate from
//! [`event_rates`] of the current post-action configuration); the earliest
//! clock fires. Clocks are sampled by inverse transform, `−ln(1 − U)/rate`,
//! from a ChaCha8 stream seeded with `seed + replication`. Statistics are
//! collected at event epochs after the warmup.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::dynamics::{event_rates, transfer_vector, Kernel};
use crate::rewards::{discounted_reward, holding_cost_rate, lump_income};
use crate::scenario::ScenarioConfig;
use crate::solver::Policy;
use crate::state_space::{Action, Configuration, Event, StateSpace, SystemState};

/// Shortest horizon for which visit frequencies are reported.
pub const MIN_VISIT_HORIZON: u64 = 100_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation setting: {0}")]
    BadConfig(String),
    #[error("policy does not cover visited state {0}")]
    MissingState(String),
    #[error("a horizon of {0} events is too short for visit frequencies")]
    HorizonTooShort(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub horizon_events: u64,
    pub warmup_events: u64,
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    /// Warmup defaults to a tenth of the horizon.
    pub fn new(horizon_events: u64, seed: u64, replications: usize) -> Self {
        SimConfig {
            horizon_events,
            warmup_events: horizon_events / 10,
            seed,
            replications,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon_events == 0 {
            return Err(SimError::BadConfig("horizon must be positive".into()));
        }
        if self.warmup_events >= self.horizon_events {
            return Err(SimError::BadConfig(
                "warmup must be below the horizon".into(),
            ));
        }
        if self.replications == 0 {
            return Err(SimError::BadConfig("at least one replication".into()));
        }
        Ok(())
    }

    pub fn counted_events(&self) -> u64 {
        self.horizon_events - self.warmup_events
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimCounts {
    pub arrivals: u64,
    pub accepts: u64,
    pub rejects: u64,
    pub failures: u64,
    pub transfers: u64,
    pub departures: u64,
    pub returns: u64,
}

impl SimCounts {
    fn add(&mut self, other: &SimCounts) {
        self.arrivals += other.arrivals;
        self.accepts += other.accepts;
        self.rejects += other.rejects;
        self.failures += other.failures;
        self.transfers += other.transfers;
        self.departures += other.departures;
        self.returns += other.returns;
    }
}

/// Mean across replications with a Student-t 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    fn from_samples(samples: &[f64]) -> Estimate {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Estimate {
                mean,
                half_width: f64::INFINITY,
            };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        Estimate {
            mean,
            half_width: t * (var / n).sqrt(),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width
    }
}

/// Per-replication outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub acceptance: f64,
    pub blocking: f64,
    pub reward_per_transition: f64,
    pub reward_per_time: f64,
    /// Time-average number of services in the system.
    pub mean_services: f64,
    pub counts: SimCounts,
    pub services_at_warmup: u32,
    pub final_services: u32,
    /// Largest Σ_k k·δ_k(r_i) observed per pair.
    pub peak_occupied_blocks: Vec<u32>,
    /// Smallest availability observed per RIS.
    pub min_availability: Vec<u32>,
    pub simulated_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub acceptance: Estimate,
    pub blocking: Estimate,
    pub avg_reward_transition: Estimate,
    pub avg_reward_time: Estimate,
    pub mean_services: Estimate,
    /// Counts summed over replications, after warmup.
    pub counts: SimCounts,
    pub replications: Vec<Replication>,
    pub sim: SimConfig,
    visit_totals: Vec<u64>,
    visit_squares: Vec<f64>,
}

/// Applies an action to a configuration.
fn step_config(config: &mut Configuration, event: Event, action: &Action) {
    match (event, action) {
        (Event::Arrival, Action::Accept { ris, blocks }) => {
            *config.services_mut(*ris, *blocks) += 1
        }
        (Event::Departure { ris, blocks }, _) => *config.services_mut(ris, blocks) -= 1,
        (Event::BlockReturn { ris }, _) => config.availability[ris] += 1,
        (Event::BlockFailure { ris }, _) => config.availability[ris] -= 1,
        _ => {}
    }
}

fn run_replication(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    kernel: &Kernel,
    policy: &Policy,
    sim: &SimConfig,
    replication: usize,
    visits: Option<&mut [u64]>,
) -> Result<Replication, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed.wrapping_add(replication as u64));
    let alpha = cfg.econ.discount_alpha;
    let r = cfg.num_ris();
    let mut visits = visits;
    let mut state = SystemState {
        config: Configuration::empty(cfg),
        event: Event::Arrival,
    };
    let mut counts = SimCounts::default();
    let mut reward_sum = 0.0;
    let mut time = 0.0;
    let mut service_time = 0.0;
    let mut services_at_warmup = 0;
    let mut peak = vec![0u32; r];
    let mut min_avail = cfg.block_counts();

    for epoch in 0..sim.horizon_events {
        let counting = epoch >= sim.warmup_events;
        if epoch == sim.warmup_events {
            services_at_warmup = state.config.total_services();
        }
        let idx = space
            .index_of(&state)
            .ok_or_else(|| SimError::MissingState(state.to_string()))?;
        let action = match state.event {
            Event::Arrival => policy.action(kernel, idx),
            Event::Departure { .. } | Event::BlockReturn { .. } => Action::Update,
            Event::BlockFailure { ris } => Action::Transfer(transfer_vector(&state.config, ris)),
        };

        let event = state.event;
        step_config(&mut state.config, event, &action);
        let rates = event_rates(&state.config, cfg);
        let reward = discounted_reward(
            lump_income(&action, &cfg.econ),
            holding_cost_rate(&state.config, cfg.econ.hold_c),
            alpha,
            rates.total,
        );

        // competing clocks
        let mut next = Event::Arrival;
        let mut sojourn = f64::INFINITY;
        for (e, rate) in rates.events() {
            if rate > 0.0 {
                let u: f64 = rng.random();
                let t = -(1.0 - u).ln() / rate;
                if t < sojourn {
                    sojourn = t;
                    next = e;
                }
            }
        }

        if counting {
            if let Some(v) = visits.as_deref_mut() {
                v[idx] += 1;
            }
            match event {
                Event::Arrival => {
                    counts.arrivals += 1;
                    if action.is_accept() {
                        counts.accepts += 1;
                    } else {
                        counts.rejects += 1;
                    }
                }
                Event::Departure { .. } => counts.departures += 1,
                Event::BlockFailure { .. } => {
                    counts.failures += 1;
                    if let Action::Transfer(t) = action {
                        if !t.is_empty() {
                            counts.transfers += 1;
                        }
                    }
                }
                Event::BlockReturn { .. } => counts.returns += 1,
            }
            reward_sum += reward;
            time += sojourn;
            service_time += state.config.total_services() as f64 * sojourn;
        }
        for i in 0..r {
            peak[i] = peak[i].max(state.config.occupied_blocks(i));
            min_avail[i] = min_avail[i].min(state.config.availability[i]);
        }
        state.event = next;
    }

    let epochs = sim.counted_events() as f64;
    let acceptance = if counts.arrivals > 0 {
        counts.accepts as f64 / counts.arrivals as f64
    } else {
        0.0
    };
    Ok(Replication {
        acceptance,
        blocking: 1.0 - acceptance,
        reward_per_transition: reward_sum / epochs,
        reward_per_time: reward_sum / time,
        mean_services: service_time / time,
        counts,
        services_at_warmup,
        final_services: state.config.total_services(),
        peak_occupied_blocks: peak,
        min_availability: min_avail,
        simulated_time: time,
    })
}

struct Accumulator {
    reps: Vec<(usize, Replication)>,
    totals: Vec<u64>,
    squares: Vec<f64>,
    error: Option<SimError>,
}

fn merge(mut a: Accumulator, b: Accumulator) -> Accumulator {
    a.reps.extend(b.reps);
    for (x, y) in a.totals.iter_mut().zip(&b.totals) {
        *x += y;
    }
    for (x, y) in a.squares.iter_mut().zip(&b.squares) {
        *x += y;
    }
    if a.error.is_none() {
        a.error = b.error;
    }
    a
}

/// Runs `sim.replications` independent replications of `policy`.
pub fn simulate(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    kernel: &Kernel,
    policy: &Policy,
    sim: &SimConfig,
) -> Result<SimReport, SimError> {
    sim.validate()?;
    if policy.len() != space.len() {
        return Err(SimError::BadConfig(format!(
            "policy covers {} states, space has {}",
            policy.len(),
            space.len()
        )));
    }
    let n = space.len();
    let acc = (0..sim.replications)
        .into_par_iter()
        .fold(
            || Accumulator {
                reps: Vec::new(),
                totals: vec![0; n],
                squares: vec![0.0; n],
                error: None,
            },
            |mut acc, j| {
                if acc.error.is_some() {
                    return acc;
                }
                let mut visits = vec![0u64; n];
                match run_replication(cfg, space, kernel, policy, sim, j, Some(&mut visits)) {
                    Ok(rep) => {
                        for ((t, q), &v) in acc.totals.iter_mut().zip(&mut acc.squares).zip(&visits)
                        {
                            *t += v;
                            // integer-valued squares stay exact below 2^53
                            *q += (v * v) as f64;
                        }
                        acc.reps.push((j, rep));
                    }
                    Err(e) => acc.error = Some(e),
                }
                acc
            },
        )
        .reduce(
            || Accumulator {
                reps: Vec::new(),
                totals: vec![0; n],
                squares: vec![0.0; n],
                error: None,
            },
            merge,
        );
    if let Some(e) = acc.error {
        return Err(e);
    }
    let mut reps = acc.reps;
    reps.sort_by_key(|r| r.0);
    let reps: Vec<Replication> = reps.into_iter().map(|r| r.1).collect();
    let collect = |f: fn(&Replication) -> f64| -> Estimate {
        Estimate::from_samples(&reps.iter().map(f).collect::<Vec<_>>())
    };
    let mut counts = SimCounts::default();
    reps.iter().for_each(|r| counts.add(&r.counts));
    Ok(SimReport {
        acceptance: collect(|r| r.acceptance),
        blocking: collect(|r| r.blocking),
        avg_reward_transition: collect(|r| r.reward_per_transition),
        avg_reward_time: collect(|r| r.reward_per_time),
        mean_services: collect(|r| r.mean_services),
        counts,
        replications: reps,
        sim: *sim,
        visit_totals: acc.totals,
        visit_squares: acc.squares,
    })
}

/// Empirical visit frequencies at event epochs with their standard errors
/// across replications, index-aligned with the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitDistribution {
    pub frequency: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl VisitDistribution {
    /// States never visited in any replication.
    pub fn unvisited(&self) -> impl Iterator<Item = usize> + '_ {
        self.frequency
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == 0.0)
            .map(|(s, _)| s)
    }
}

pub fn visit_distribution(report: &SimReport) -> Result<VisitDistribution, SimError> {
    if report.sim.horizon_events < MIN_VISIT_HORIZON {
        return Err(SimError::HorizonTooShort(report.sim.horizon_events));
    }
    let per_rep = report.sim.counted_events() as f64;
    let reps = report.sim.replications as f64;
    let total = per_rep * reps;
    let frequency: Vec<f64> = report
        .visit_totals
        .iter()
        .map(|&v| v as f64 / total)
        .collect();
    let std_error = report
        .visit_squares
        .iter()
        .zip(&frequency)
        .map(|(&sq, &mean)| {
            if reps < 2.0 {
                return f64::INFINITY;
            }
            // per-replication frequency f_j = v_j / per_rep
            let sum_f2 = sq / (per_rep * per_rep);
            let var = ((sum_f2 - reps * mean * mean) / (reps - 1.0)).max(0.0);
            (var / reps).sqrt()
        })
        .collect();
    Ok(VisitDistribution {
        frequency,
        std_error,
    })
}
