use std::io::{self, Write};

use rayon::prelude::*;

use super::{equilibrium_bounds, AnalysisError};
use crate::dynamics::{init_state, ForcingSchedule, SimParams};
use crate::network::Network;
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisConfig {
    /// Change in `p_int` per step on both legs.
    pub ramp_rate: f64,
    pub p_int_max: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Steps a midpoint crossing must persist before it counts.
    pub persistence: usize,
    /// Crossings are ignored where the two analytic branches are closer
    /// than this, since the midpoint then carries no information.
    pub min_gap: f64,
}

impl HysteresisConfig {
    pub fn new(ramp_rate: f64, p_int_max: f64, replicates: usize, seed: u64) -> Self {
        HysteresisConfig { ramp_rate, p_int_max, replicates, seed, persistence: 20, min_gap: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisReplicate {
    /// `(p_int, f)` while forcing rises.
    pub up: Vec<(f64, f64)>,
    /// `(p_int, f)` while forcing falls.
    pub down: Vec<(f64, f64)>,
    /// Forcing at which the network dropped to the low-f branch.
    pub downward_shift: Option<f64>,
    /// Forcing at which it climbed back.
    pub recovery: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisCurve {
    pub params: SimParams,
    pub replicates: Vec<HysteresisReplicate>,
}

/// Ramps `p_int` from 0 to `p_int_max` and back, starting with every agent
/// active, and locates the regime shifts on each leg as persistent crossings
/// of the midpoint between the analytic high-f and low-f equilibria.
pub fn hysteresis_sweep(
    network: &Network,
    params: &SimParams,
    config: &HysteresisConfig,
) -> Result<HysteresisCurve, AnalysisError> {
    params.validate()?;
    if !(config.ramp_rate > 0.0) {
        return Err(AnalysisError::NonPositiveRamp(config.ramp_rate));
    }
    super::check_probability("p_int_max", config.p_int_max)?;
    let tau_bar = params.tau_bar();
    if !(tau_bar > 0.0) {
        return Err(AnalysisError::NonPositiveTauBar(tau_bar));
    }
    let forcing = ForcingSchedule::triangle(config.ramp_rate, config.p_int_max);
    let ForcingSchedule::Ramp { half_steps, .. } = forcing else { unreachable!() };

    let replicates = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, &[tag::DYNAMICS, r]);
            let mut state = init_state(network, 0.0, params, &mut rng);
            let mut up = Vec::with_capacity(half_steps as usize + 1);
            let mut down = Vec::with_capacity(half_steps as usize);
            for t in 0..=2 * half_steps {
                let p = forcing.at(t);
                state.step(network, params, p, &mut rng);
                let point = (p, state.active_fraction());
                if t <= half_steps {
                    up.push(point);
                } else {
                    down.push(point);
                }
            }
            let midpoint = |p: f64| {
                let (hi, lo) = equilibrium_bounds(p, params.p_ext, tau_bar).expect("validated");
                ((hi + lo) / 2.0, hi - lo)
            };
            let below = |&(p, f): &(f64, f64)| {
                let (m, gap) = midpoint(p);
                gap >= config.min_gap && f < m
            };
            let above = |&(p, f): &(f64, f64)| {
                let (m, gap) = midpoint(p);
                gap >= config.min_gap && f >= m
            };
            let downward_shift = first_persistent(&up, config.persistence, below);
            let recovery = downward_shift.and_then(|_| first_persistent(&down, config.persistence, above));
            HysteresisReplicate { up, down, downward_shift, recovery }
        })
        .collect();
    Ok(HysteresisCurve { params: *params, replicates })
}

/// Forcing at the first point from which `pred` holds for `persistence`
/// consecutive points (or through the end of the leg).
fn first_persistent(
    leg: &[(f64, f64)],
    persistence: usize,
    pred: impl Fn(&(f64, f64)) -> bool,
) -> Option<f64> {
    let need = persistence.max(1);
    let mut run = 0usize;
    for (i, point) in leg.iter().enumerate() {
        if pred(point) {
            run += 1;
            if run >= need {
                return Some(leg[i + 1 - run].0);
            }
        } else {
            run = 0;
        }
    }
    (run > 0).then(|| leg[leg.len() - run].0)
}

impl HysteresisCurve {
    /// Replicate-averaged `f` on each leg, written as `branch,p_int,f`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "branch,p_int,f")?;
        if self.replicates.is_empty() {
            return out.flush();
        }
        let n = self.replicates.len() as f64;
        let legs: [(&str, fn(&HysteresisReplicate) -> &[(f64, f64)]); 2] =
            [("up", |r| &r.up), ("down", |r| &r.down)];
        for (name, leg) in legs {
            let first = leg(&self.replicates[0]);
            for (i, &(p, _)) in first.iter().enumerate() {
                let f = self.replicates.iter().map(|r| leg(r)[i].1).sum::<f64>() / n;
                writeln!(out, "{name},{p},{f}")?;
            }
        }
        out.flush()
    }

    /// One row per replicate: `replicate,downward_shift,recovery` (blank when
    /// not detected).
    pub fn write_critical_points_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "replicate,downward_shift,recovery")?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (i, r) in self.replicates.iter().enumerate() {
            writeln!(out, "{i},{},{}", fmt(r.downward_shift), fmt(r.recovery))?;
        }
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persistent_crossing() {
        let leg: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, if i == 2 || i >= 5 { 0.0 } else { 1.0 })).collect();
        let low = |&(_, f): &(f64, f64)| f < 0.5;
        assert_eq!(first_persistent(&leg, 3, low), Some(5.0));
        assert_eq!(first_persistent(&leg, 1, low), Some(2.0));
        // a run reaching the end of the leg still counts
        assert_eq!(first_persistent(&leg, 50, low), Some(5.0));
        let never = |_: &(f64, f64)| false;
        assert_eq!(first_persistent(&leg, 1, never), None);
    }
}
