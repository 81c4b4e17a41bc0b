//! Stochastic failure/recovery kernel.
//!
//! One step is synchronous: scheduled recoveries first, then failures
//! evaluated against the statuses frozen after the recovery phase, then
//! recovery times for the newly failed agents, then the clock advances.

mod forcing;
mod state;
mod trajectory;

pub use forcing::ForcingSchedule;
pub use state::{critical_neighborhood_prob, init_state, sample_recovery_time, AgentStatus, SimState};
pub use trajectory::{StepRecord, Trajectory};

use rand::Rng;
use thiserror::Error;

use crate::network::Network;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{name} = {value} must lie in [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("{name} = {value} must be finite and non-negative")]
    Negative { name: &'static str, value: f64 },
    #[error("horizon must be >= 1")]
    ZeroHorizon,
}

/// Model parameters. Times are in days (one step is one day).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Critical fraction of inactive neighbors, `t_h`.
    pub threshold: f64,
    /// Extrinsic (strategic) failure probability per step.
    pub p_ext: f64,
    /// Minimum recovery time.
    pub tau0: f64,
    /// Mean (and standard deviation) of the exponential recovery delay.
    pub sigma: f64,
}

impl SimParams {
    pub fn new(threshold: f64, p_ext: f64, tau0: f64, sigma: f64) -> Result<Self, ParamError> {
        let p = SimParams { threshold, p_ext, tau0, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_probability("t_h", self.threshold)?;
        check_probability("p_ext", self.p_ext)?;
        check_non_negative("tau0", self.tau0)?;
        check_non_negative("sigma", self.sigma)?;
        Ok(())
    }

    /// Mean recovery time `tau0 + sigma`.
    pub fn tau_bar(&self) -> f64 {
        self.tau0 + self.sigma
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<(), ParamError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ParamError::Probability { name, value })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ParamError::Negative { name, value })
    }
}

/// Runs `horizon` steps from a fresh state with `initial_inactive_fraction`
/// of the agents intrinsically failed.
pub fn run<R: Rng + ?Sized>(
    network: &Network,
    params: &SimParams,
    forcing: &ForcingSchedule,
    horizon: usize,
    initial_inactive_fraction: f64,
    rng: &mut R,
) -> Result<Trajectory, ParamError> {
    params.validate()?;
    check_probability("initial inactive fraction", initial_inactive_fraction)?;
    if horizon == 0 {
        return Err(ParamError::ZeroHorizon);
    }
    let mut state = init_state(network, initial_inactive_fraction, params, rng);
    let mut traj = Trajectory::with_capacity(network.agent_count(), horizon);
    for _ in 0..horizon {
        let p_int = forcing.at(state.clock());
        traj.push(state.step(network, params, p_int, rng));
    }
    debug_assert!(state.cache_is_consistent(network));
    Ok(traj)
}
