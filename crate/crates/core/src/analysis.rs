//! End-to-end pipeline: enumerate, build the kernel and rewards, uniformize,
//! solve, and evaluate a policy in steady state.

use crate::dynamics::Kernel;
use crate::rewards::{uniformize, RewardTable, UniformizedModel};
use crate::scenario::ScenarioConfig;
use crate::solver::{
    metrics, steady_state_from, value_iteration, Metrics, Policy, PolicyChain, SteadyState,
    ValueVector, DEFAULT_MAX_ITERS,
};
use crate::state_space::{enumerate_states_with_cap, state_cap_from_env, StateSpace};
use crate::Error;

/// Everything derived from one scenario before solving.
#[derive(Debug)]
pub struct Model {
    pub cfg: ScenarioConfig,
    pub space: StateSpace,
    pub kernel: Kernel,
    pub rewards: RewardTable,
    pub uniformized: UniformizedModel,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: ValueVector,
    pub policy: Policy,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub steady: SteadyState,
    pub metrics: Metrics,
}

impl Model {
    /// Builds with the state cap taken from the environment.
    pub fn build(cfg: &ScenarioConfig) -> Result<Model, Error> {
        Model::build_with_cap(cfg, state_cap_from_env())
    }

    pub fn build_with_cap(cfg: &ScenarioConfig, cap: usize) -> Result<Model, Error> {
        let cfg = cfg.clone().validate()?;
        let space = enumerate_states_with_cap(&cfg, cap)?;
        let kernel = Kernel::build(&space, &cfg)?;
        let rewards = RewardTable::build(&space, &kernel, &cfg.econ);
        let uniformized = uniformize(&kernel, &rewards)?;
        Ok(Model {
            cfg,
            space,
            kernel,
            rewards,
            uniformized,
        })
    }

    pub fn solve(&self) -> Result<Solution, Error> {
        let (values, policy) = value_iteration(
            &self.space,
            &self.kernel,
            &self.uniformized,
            self.cfg.vi_tolerance,
            DEFAULT_MAX_ITERS,
        )?;
        Ok(Solution { values, policy })
    }

    /// Stationary distribution of the embedded chain under `policy`,
    /// restricted to the class reached from the empty system.
    pub fn evaluate(&self, policy: &Policy) -> Result<Evaluation, Error> {
        let chain = PolicyChain::new(&self.space, &self.kernel, policy);
        let steady = steady_state_from(&chain, self.space.empty_state())?;
        let metrics = metrics(&self.space, &self.kernel, &self.rewards, policy, &steady)?;
        Ok(Evaluation { steady, metrics })
    }
}

/// Result of [`analyze`].
#[derive(Debug)]
pub struct Analysis {
    pub model: Model,
    pub solution: Solution,
    pub evaluation: Evaluation,
}

pub fn analyze(cfg: &ScenarioConfig) -> Result<Analysis, Error> {
    let model = Model::build(cfg)?;
    let solution = model.solve()?;
    let evaluation = model.evaluate(&solution.policy)?;
    Ok(Analysis {
        model,
        solution,
        evaluation,
    })
}
