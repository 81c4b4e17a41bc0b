use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use rand_distr::Exp1;

use super::{SimParams, StepRecord};
use crate::network::Network;
use crate::rng::for_each_bernoulli;

const NOT_CRITICAL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentStatus {
    Active,
    FailedIntrinsic { recover_at: u64 },
    FailedExtrinsic { recover_at: u64 },
}

impl AgentStatus {
    #[inline]
    pub fn is_active(self) -> bool {
        matches!(self, AgentStatus::Active)
    }
}

/// `tau0` plus an exponential delay of mean `sigma`, rounded up to a whole
/// step and never shorter than one step. Rounding up lengthens the mean by
/// about half a step.
pub fn sample_recovery_time<R: Rng + ?Sized>(tau0: f64, sigma: f64, rng: &mut R) -> u64 {
    let delay = if sigma > 0.0 { sigma * rng.sample::<f64, _>(Exp1) } else { 0.0 };
    ((tau0 + delay).ceil() as u64).max(1)
}

/// Smallest inactive-neighbor count whose fraction of `degree` strictly
/// exceeds `threshold`.
fn critical_count(degree: usize, threshold: f64) -> u32 {
    if degree == 0 {
        return NOT_CRITICAL;
    }
    let d = degree as f64;
    let mut k = (threshold * d).floor().max(0.0) as u64;
    while k > 0 && (k - 1) as f64 / d > threshold {
        k -= 1;
    }
    while k as f64 / d <= threshold {
        k += 1;
    }
    if k > degree as u64 {
        NOT_CRITICAL
    } else {
        k as u32
    }
}

/// Mutable simulation state for one run over a shared network.
///
/// Inactive-neighbor counts and the set of agents in a critically inactive
/// neighborhood are maintained incrementally as agents fail and recover.
#[derive(Debug, Clone)]
pub struct SimState {
    clock: u64,
    status: Vec<AgentStatus>,
    inactive_neighbors: Vec<u32>,
    threshold: f64,
    critical_min: Vec<u32>,
    critical: Vec<u32>,
    critical_pos: Vec<u32>,
    queue: BTreeMap<u64, Vec<u32>>,
    active: usize,
    n_int: usize,
    n_ext: usize,
    failed_int: Vec<u32>,
    failed_ext: Vec<u32>,
    spare: Vec<Vec<u32>>,
}

/// Fresh state with `floor(inactive_fraction * n)` uniformly chosen agents
/// failed intrinsically, each with a freshly drawn recovery time.
pub fn init_state<R: Rng + ?Sized>(
    network: &Network,
    inactive_fraction: f64,
    params: &SimParams,
    rng: &mut R,
) -> SimState {
    let n = network.agent_count();
    let inactive = ((inactive_fraction.clamp(0.0, 1.0) * n as f64) + 1e-9).floor() as usize;
    let inactive = inactive.min(n);
    let mut state = SimState {
        clock: 0,
        status: vec![AgentStatus::Active; n],
        inactive_neighbors: vec![0; n],
        threshold: params.threshold,
        critical_min: Vec::new(),
        critical: Vec::new(),
        critical_pos: vec![NOT_CRITICAL; n],
        queue: BTreeMap::new(),
        active: n,
        n_int: 0,
        n_ext: 0,
        failed_int: Vec::new(),
        failed_ext: Vec::new(),
        spare: Vec::new(),
    };
    let mut chosen = index::sample(rng, n, inactive).into_vec();
    chosen.sort_unstable();
    for a in chosen {
        let recover_at = sample_recovery_time(params.tau0, params.sigma, rng);
        state.status[a] = AgentStatus::FailedIntrinsic { recover_at };
        state.schedule(a as u32, recover_at);
        state.active -= 1;
        state.n_int += 1;
        for &b in network.neighbors(a) {
            state.inactive_neighbors[b as usize] += 1;
        }
    }
    state.set_threshold(network, params.threshold);
    state
}

impl SimState {
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn status(&self, agent: usize) -> AgentStatus {
        self.status[agent]
    }

    pub fn statuses(&self) -> &[AgentStatus] {
        &self.status
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    pub fn agent_count(&self) -> usize {
        self.status.len()
    }

    pub fn active_fraction(&self) -> f64 {
        self.active as f64 / self.status.len() as f64
    }

    pub fn inactive_neighbor_count(&self, agent: usize) -> u32 {
        self.inactive_neighbors[agent]
    }

    /// Fraction of all agents in a critically inactive neighborhood, from
    /// the maintained set.
    pub fn critical_fraction(&self) -> f64 {
        self.critical.len() as f64 / self.status.len() as f64
    }

    /// Rebuilds critical membership for a new threshold.
    pub fn set_threshold(&mut self, network: &Network, threshold: f64) {
        let n = self.status.len();
        self.threshold = threshold;
        self.critical_min = (0..n).map(|a| critical_count(network.degree(a), threshold)).collect();
        self.critical.clear();
        self.critical_pos.iter_mut().for_each(|p| *p = NOT_CRITICAL);
        for a in 0..n {
            if self.inactive_neighbors[a] >= self.critical_min[a] {
                self.critical_pos[a] = self.critical.len() as u32;
                self.critical.push(a as u32);
            }
        }
    }

    fn schedule(&mut self, agent: u32, recover_at: u64) {
        let spare = &mut self.spare;
        self.queue
            .entry(recover_at)
            .or_insert_with(|| spare.pop().unwrap_or_default())
            .push(agent);
    }

    #[inline]
    fn neighbor_failed(&mut self, b: usize) {
        let c = self.inactive_neighbors[b] + 1;
        self.inactive_neighbors[b] = c;
        if c == self.critical_min[b] {
            self.critical_pos[b] = self.critical.len() as u32;
            self.critical.push(b as u32);
        }
    }

    #[inline]
    fn neighbor_recovered(&mut self, b: usize) {
        let c = self.inactive_neighbors[b];
        if c == self.critical_min[b] {
            let pos = self.critical_pos[b] as usize;
            let last = self.critical.pop().unwrap();
            if last as usize != b {
                self.critical[pos] = last;
                self.critical_pos[last as usize] = pos as u32;
            }
            self.critical_pos[b] = NOT_CRITICAL;
        }
        self.inactive_neighbors[b] = c - 1;
    }

    /// Advances one step with intrinsic failure probability `p_int`.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        network: &Network,
        params: &SimParams,
        p_int: f64,
        rng: &mut R,
    ) -> StepRecord {
        if params.threshold != self.threshold {
            self.set_threshold(network, params.threshold);
        }
        let (r_int, r_ext) = self.recover(network);

        // Failures are drawn against the post-recovery neighborhoods; counts
        // and the critical set stay frozen until both passes are done.
        let mut failed_int = std::mem::take(&mut self.failed_int);
        let mut failed_ext = std::mem::take(&mut self.failed_ext);
        failed_int.clear();
        failed_ext.clear();
        {
            let status = &mut self.status;
            for_each_bernoulli(rng, status.len(), p_int, |a| {
                if status[a].is_active() {
                    failed_int.push(a as u32);
                }
            });
            for &a in &failed_int {
                status[a as usize] = AgentStatus::FailedIntrinsic { recover_at: 0 };
            }
            let critical = &self.critical;
            for_each_bernoulli(rng, critical.len(), params.p_ext, |k| {
                let a = critical[k];
                if status[a as usize].is_active() {
                    failed_ext.push(a);
                }
            });
        }

        for &a in &failed_int {
            let recover_at = self.clock + sample_recovery_time(params.tau0, params.sigma, rng);
            self.status[a as usize] = AgentStatus::FailedIntrinsic { recover_at };
            self.schedule(a, recover_at);
        }
        for &a in &failed_ext {
            let recover_at = self.clock + sample_recovery_time(params.tau0, params.sigma, rng);
            self.status[a as usize] = AgentStatus::FailedExtrinsic { recover_at };
            self.schedule(a, recover_at);
        }
        for &a in failed_int.iter().chain(&failed_ext) {
            for &b in network.neighbors(a as usize) {
                self.neighbor_failed(b as usize);
            }
        }
        let (f_int, f_ext) = (failed_int.len(), failed_ext.len());
        self.active -= f_int + f_ext;
        self.n_int += f_int;
        self.n_ext += f_ext;
        self.failed_int = failed_int;
        self.failed_ext = failed_ext;

        self.clock += 1;
        StepRecord {
            t: self.clock,
            active: self.active as u32,
            n_int: self.n_int as u32,
            n_ext: self.n_ext as u32,
            f_int: f_int as u32,
            f_ext: f_ext as u32,
            r_int,
            r_ext,
            critical: self.critical.len() as u32,
        }
    }

    fn recover(&mut self, network: &Network) -> (u32, u32) {
        let (mut r_int, mut r_ext) = (0u32, 0u32);
        while let Some(entry) = self.queue.first_entry() {
            if *entry.key() > self.clock {
                break;
            }
            let mut agents = entry.remove();
            for &a in &agents {
                match self.status[a as usize] {
                    AgentStatus::FailedIntrinsic { .. } => {
                        r_int += 1;
                        self.n_int -= 1;
                    }
                    AgentStatus::FailedExtrinsic { .. } => {
                        r_ext += 1;
                        self.n_ext -= 1;
                    }
                    AgentStatus::Active => unreachable!("active agent {a} in recovery queue"),
                }
                self.status[a as usize] = AgentStatus::Active;
                self.active += 1;
                for &b in network.neighbors(a as usize) {
                    self.neighbor_recovered(b as usize);
                }
            }
            agents.clear();
            self.spare.push(agents);
        }
        (r_int, r_ext)
    }

    /// Recomputes the cached counts and critical set from the statuses.
    pub fn cache_is_consistent(&self, network: &Network) -> bool {
        let n = self.status.len();
        let mut critical = 0;
        for a in 0..n {
            let inactive =
                network.neighbors(a).iter().filter(|&&b| !self.status[b as usize].is_active()).count();
            if inactive as u32 != self.inactive_neighbors[a] {
                return false;
            }
            let is_critical = critical_count(network.degree(a), self.threshold) <= inactive as u32;
            if is_critical != (self.critical_pos[a] != NOT_CRITICAL) {
                return false;
            }
            critical += is_critical as usize;
        }
        let counts = self.status.iter().fold((0, 0, 0), |(a, i, e), s| match s {
            AgentStatus::Active => (a + 1, i, e),
            AgentStatus::FailedIntrinsic { .. } => (a, i + 1, e),
            AgentStatus::FailedExtrinsic { .. } => (a, i, e + 1),
        });
        critical == self.critical.len() && counts == (self.active, self.n_int, self.n_ext)
    }
}

/// Fraction of all agents whose inactive-neighbor fraction strictly exceeds
/// `threshold`, computed directly from the statuses. Isolated agents are
/// never critical.
pub fn critical_neighborhood_prob(state: &SimState, network: &Network, threshold: f64) -> f64 {
    let n = network.agent_count();
    if n == 0 {
        return 0.0;
    }
    let critical = (0..n)
        .filter(|&a| {
            let nb = network.neighbors(a);
            if nb.is_empty() {
                return false;
            }
            let inactive = nb.iter().filter(|&&b| !state.status(b as usize).is_active()).count();
            inactive as f64 / nb.len() as f64 > threshold
        })
        .count();
    critical as f64 / n as f64
}
