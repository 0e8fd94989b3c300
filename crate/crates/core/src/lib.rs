//! Admission control and block-failure recovery for RIS-assisted VR service
//! provisioning, modelled as a semi-Markov decision process.
//!
//! The crate enumerates the system states, builds the event-driven kernel,
//! uniformizes the discounted model, solves it by value iteration and
//! evaluates the resulting policy analytically or by simulation. A THz link
//! budget helper turns channel parameters into a service rate.
//!
//! ```
//! use ris_smdp::{analyze, Preset};
//!
//! let result = analyze(&Preset::Scenario1.config()).unwrap();
//! assert_eq!(result.model.space.len(), 126);
//! assert!(result.evaluation.metrics.acceptance_prob > 0.0);
//! ```

pub mod analysis;
pub mod channel;
pub mod dynamics;
pub mod rewards;
pub mod scenario;
pub mod simulator;
pub mod solver;
pub mod state_space;

pub use analysis::{analyze, Analysis, Evaluation, Model, Solution};
pub use channel::{link_report, ChannelError, ChannelParams, LinkReport};
pub use dynamics::{event_rates, transfer_vector, Kernel, RateBundle};
pub use rewards::{RewardTable, UniformizationError, UniformizedModel};
pub use scenario::{preset, ConfigError, Preset, ScenarioConfig};
pub use simulator::{simulate, visit_distribution, SimConfig, SimError, SimReport};
pub use solver::{Metrics, Policy, SolverError, SteadyState, ValueVector};
pub use state_space::{
    enumerate_states, Action, Configuration, Event, ModelError, StateSpace, SystemState,
};

/// Any failure of the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Uniformization(#[from] UniformizationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
