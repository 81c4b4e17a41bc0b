use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use super::{equilibrium_bounds, AnalysisError};
use crate::dynamics::{init_state, SimParams};
use crate::network::{build_hierarchy, Network, NetworkConfig};
use crate::rng::{self, derive_seed, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegimeKind {
    /// High-f equilibrium.
    I,
    /// Low-f, but recovers once forcing is removed.
    II,
    /// Low-f with no recovery even at zero forcing.
    III,
}

impl RegimeKind {
    fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            RegimeKind::I => "I",
            RegimeKind::II => "II",
            RegimeKind::III => "III",
        }
    }
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimePolicy {
    /// Steps simulated at the target forcing from an all-inactive start.
    pub settle_steps: usize,
    /// Steps allowed for recovery after forcing drops to zero.
    pub recovery_steps: usize,
    pub replicates: usize,
    /// Winner share below which the classification is flagged as not
    /// confident.
    pub vote_threshold: f64,
    /// Settled f within this distance of the high-f equilibrium votes I.
    pub high_tolerance: f64,
    /// Recovery means reaching this fraction of the zero-forcing high-f
    /// equilibrium.
    pub recovery_level: f64,
    /// Share of the settle phase averaged to get the settled f.
    pub tail_fraction: f64,
}

impl Default for RegimePolicy {
    fn default() -> Self {
        RegimePolicy {
            settle_steps: 5000,
            recovery_steps: 5000,
            replicates: 10,
            vote_threshold: 0.5,
            high_tolerance: 0.02,
            recovery_level: 0.9,
            tail_fraction: 0.1,
        }
    }
}

impl RegimePolicy {
    fn validate(&self) -> Result<(), AnalysisError> {
        if self.settle_steps == 0 || self.replicates == 0 {
            return Err(AnalysisError::Config("settle_steps and replicates must be positive".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(AnalysisError::Config(format!("tail_fraction {} must lie in (0, 1]", self.tail_fraction)));
        }
        Ok(())
    }
}

/// Majority-vote classification with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    /// Votes for I, II, III.
    pub votes: [usize; 3],
    /// (winner votes - runner-up votes) / replicates.
    pub vote_margin: f64,
    pub confident: bool,
    /// Replicate mean of the settled f.
    pub f_settled: f64,
    /// Replicates that ran the recovery test and recovered.
    pub recovered: usize,
}

impl Regime {
    fn from_votes(votes: [usize; 3], f_settled: f64, recovered: usize, threshold: f64) -> Self {
        let total: usize = votes.iter().sum();
        // Ties resolve toward the riskier regime.
        let kinds = [RegimeKind::I, RegimeKind::II, RegimeKind::III];
        let kind = *kinds.iter().max_by_key(|k| votes[k.index()]).unwrap();
        let winner = votes[kind.index()];
        let runner_up = kinds.iter().filter(|&&k| k != kind).map(|k| votes[k.index()]).max().unwrap_or(0);
        let share = winner as f64 / total as f64;
        Regime {
            kind,
            votes,
            vote_margin: (winner - runner_up) as f64 / total as f64,
            confident: share >= threshold,
            f_settled,
            recovered,
        }
    }
}

/// Builds `count` networks sharing `config` but with independent seeds.
pub fn build_ensemble(config: &NetworkConfig, count: usize, seed: u64) -> Result<Vec<Network>, AnalysisError> {
    (0..count as u64)
        .map(|r| Ok(build_hierarchy(&config.clone().with_seed(derive_seed(seed, &[tag::NETWORK, r])))?))
        .collect()
}

/// Builds a fresh network ensemble from `network_config` and classifies.
pub fn classify_regime(
    network_config: &NetworkConfig,
    params: &SimParams,
    p_int: f64,
    policy: &RegimePolicy,
    seed: u64,
) -> Result<Regime, AnalysisError> {
    let networks = build_ensemble(network_config, policy.replicates, seed)?;
    classify_on(&networks, params, p_int, policy, seed)
}

/// Classifies on a prebuilt ensemble; replicate `r` uses network
/// `r % networks.len()`.
pub fn classify_on(
    networks: &[Network],
    params: &SimParams,
    p_int: f64,
    policy: &RegimePolicy,
    seed: u64,
) -> Result<Regime, AnalysisError> {
    params.validate()?;
    policy.validate()?;
    super::check_probability("p_int", p_int)?;
    if networks.is_empty() {
        return Err(AnalysisError::Config("empty network ensemble".into()));
    }
    let tau_bar = params.tau_bar();
    if !(tau_bar > 0.0) {
        return Err(AnalysisError::NonPositiveTauBar(tau_bar));
    }
    let (f_high, f_low) = equilibrium_bounds(p_int, params.p_ext, tau_bar)?;
    let (f_high_zero, _) = equilibrium_bounds(0.0, params.p_ext, tau_bar)?;
    let tail = ((policy.settle_steps as f64 * policy.tail_fraction).ceil() as usize).clamp(1, policy.settle_steps);

    let mut votes = [0usize; 3];
    let mut f_sum = 0.0;
    let mut recovered = 0;
    for r in 0..policy.replicates {
        let network = &networks[r % networks.len()];
        let mut rng = rng::stream(seed, &[tag::DYNAMICS, r as u64]);
        let mut state = init_state(network, 1.0, params, &mut rng);
        let mut acc = 0.0;
        for t in 0..policy.settle_steps {
            state.step(network, params, p_int, &mut rng);
            if t >= policy.settle_steps - tail {
                acc += state.active_fraction();
            }
        }
        let f_settled = acc / tail as f64;
        let tol = policy.high_tolerance;
        let (kind, did_recover) = if (f_settled - f_high).abs() <= tol {
            (RegimeKind::I, false)
        } else if f_settled > f_low + tol && f_settled < f_high - tol {
            // Neighborhoods straddle the threshold; such paths always recover.
            (RegimeKind::II, false)
        } else {
            let target = policy.recovery_level * f_high_zero;
            let mut ok = false;
            for _ in 0..policy.recovery_steps {
                state.step(network, params, 0.0, &mut rng);
                if state.active_fraction() >= target {
                    ok = true;
                    break;
                }
            }
            (if ok { RegimeKind::II } else { RegimeKind::III }, ok)
        };
        votes[kind.index()] += 1;
        f_sum += f_settled;
        recovered += did_recover as usize;
    }
    Ok(Regime::from_votes(votes, f_sum / policy.replicates as f64, recovered, policy.vote_threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Threshold,
    PExt,
    /// Mean recovery time; varied through `sigma` with `tau0` fixed.
    TauBar,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Threshold => "t_h",
            Axis::PExt => "p_ext",
            Axis::TauBar => "tau_bar",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "t_h" | "threshold" => Some(Axis::Threshold),
            "p_ext" => Some(Axis::PExt),
            "tau_bar" => Some(Axis::TauBar),
            _ => None,
        }
    }

    fn apply(self, params: &mut SimParams, value: f64) -> Result<(), AnalysisError> {
        match self {
            Axis::Threshold => params.threshold = value,
            Axis::PExt => params.p_ext = value,
            Axis::TauBar => {
                if value < params.tau0 {
                    return Err(AnalysisError::InvalidAxisValue {
                        axis: self,
                        value,
                        reason: "mean recovery time below tau0",
                    });
                }
                params.sigma = value - params.tau0;
            }
        }
        params.validate().map_err(|_| AnalysisError::InvalidAxisValue {
            axis: self,
            value,
            reason: "outside the parameter's valid range",
        })
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl AxisSpec {
    /// `n` evenly spaced values from `min` to `max` inclusive.
    pub fn linspace(axis: Axis, min: f64, max: f64, n: usize) -> Self {
        let values = match n {
            0 => Vec::new(),
            1 => vec![min],
            _ => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
        };
        AxisSpec { axis, values }
    }
}

/// First regime change along one grid line.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    /// Axis held fixed along the line.
    pub fixed_axis: Axis,
    pub fixed_value: f64,
    /// Midpoint between the two grid values straddling the change.
    pub crossing: f64,
    pub from: RegimeKind,
    pub to: RegimeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskMap {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub p_int: f64,
    /// Row-major: `cells[i * axis2.len + j]` is `(axis1[i], axis2[j])`.
    pub cells: Vec<Regime>,
}

impl RiskMap {
    pub fn get(&self, i: usize, j: usize) -> &Regime {
        &self.cells[i * self.axis2.values.len() + j]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.axis1.values.len(), self.axis2.values.len())
    }

    /// Grid-adjacent pairs (sharing an edge) whose regimes are `a` and `b`
    /// in either order.
    pub fn adjacencies(&self, a: RegimeKind, b: RegimeKind) -> usize {
        let (n1, n2) = self.dims();
        let hit = |x: RegimeKind, y: RegimeKind| (x == a && y == b) || (x == b && y == a);
        let mut count = 0;
        for i in 0..n1 {
            for j in 0..n2 {
                let k = self.get(i, j).kind;
                if i + 1 < n1 && hit(k, self.get(i + 1, j).kind) {
                    count += 1;
                }
                if j + 1 < n2 && hit(k, self.get(i, j + 1).kind) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Regime sequence along axis 2 at fixed `axis1[i]`.
    pub fn row(&self, i: usize) -> Vec<RegimeKind> {
        (0..self.dims().1).map(|j| self.get(i, j).kind).collect()
    }

    /// Regime sequence along axis 1 at fixed `axis2[j]`.
    pub fn column(&self, j: usize) -> Vec<RegimeKind> {
        (0..self.dims().0).map(|i| self.get(i, j).kind).collect()
    }

    /// First regime change along every row and every column.
    pub fn boundaries(&self) -> Vec<Boundary> {
        let (n1, n2) = self.dims();
        let mut out = Vec::new();
        let first_change = |seq: &[RegimeKind]| seq.windows(2).position(|w| w[0] != w[1]);
        for i in 0..n1 {
            let row = self.row(i);
            if let Some(j) = first_change(&row) {
                out.push(Boundary {
                    fixed_axis: self.axis1.axis,
                    fixed_value: self.axis1.values[i],
                    crossing: (self.axis2.values[j] + self.axis2.values[j + 1]) / 2.0,
                    from: row[j],
                    to: row[j + 1],
                });
            }
        }
        for j in 0..n2 {
            let col = self.column(j);
            if let Some(i) = first_change(&col) {
                out.push(Boundary {
                    fixed_axis: self.axis2.axis,
                    fixed_value: self.axis2.values[j],
                    crossing: (self.axis1.values[i] + self.axis1.values[i + 1]) / 2.0,
                    from: col[i],
                    to: col[i + 1],
                });
            }
        }
        out
    }

    /// `axis1,axis2,regime,vote_margin,f_settled`, with the axis names in a
    /// leading comment.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# axis1={} axis2={} p_int={}", self.axis1.axis, self.axis2.axis, self.p_int)?;
        writeln!(out, "axis1,axis2,regime,vote_margin,f_settled")?;
        let (n1, n2) = self.dims();
        for i in 0..n1 {
            for j in 0..n2 {
                let c = self.get(i, j);
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.axis1.values[i], self.axis2.values[j], c.kind, c.vote_margin, c.f_settled
                )?;
            }
        }
        out.flush()
    }

    pub fn write_boundaries_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "fixed_axis,fixed_value,crossing,from,to")?;
        for b in self.boundaries() {
            writeln!(out, "{},{},{},{},{}", b.fixed_axis, b.fixed_value, b.crossing, b.from, b.to)?;
        }
        out.flush()
    }
}

/// Classifies every grid point. Points run in parallel, each with its own
/// seed stream, over one network ensemble shared by the whole grid.
pub fn risk_map(
    network_config: &NetworkConfig,
    axis1: &AxisSpec,
    axis2: &AxisSpec,
    base: &SimParams,
    p_int: f64,
    policy: &RegimePolicy,
    seed: u64,
) -> Result<RiskMap, AnalysisError> {
    if axis1.axis == axis2.axis {
        return Err(AnalysisError::IdenticalAxes(axis1.axis));
    }
    for a in [axis1, axis2] {
        if a.values.len() < 2 {
            return Err(AnalysisError::GridTooSmall { axis: a.axis, len: a.values.len() });
        }
    }
    let n2 = axis2.values.len();
    let mut grid = Vec::with_capacity(axis1.values.len() * n2);
    for &v1 in &axis1.values {
        for &v2 in &axis2.values {
            let mut p = *base;
            axis1.axis.apply(&mut p, v1)?;
            axis2.axis.apply(&mut p, v2)?;
            grid.push(p);
        }
    }
    let networks = build_ensemble(network_config, policy.replicates, seed)?;
    let cells = grid
        .par_iter()
        .enumerate()
        .map(|(k, params)| {
            let point_seed = derive_seed(seed, &[(k / n2) as u64, (k % n2) as u64]);
            classify_on(&networks, params, p_int, policy, point_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RiskMap { axis1: axis1.clone(), axis2: axis2.clone(), p_int, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn votes_break_ties_toward_risk() {
        let r = Regime::from_votes([2, 2, 0], 0.8, 2, 0.5);
        assert_eq!(r.kind, RegimeKind::II);
        assert_eq!(r.vote_margin, 0.0);
        let r = Regime::from_votes([10, 0, 0], 0.9, 0, 0.5);
        assert_eq!(r.kind, RegimeKind::I);
        assert_eq!(r.vote_margin, 1.0);
        assert!(r.confident);
        let r = Regime::from_votes([3, 3, 4], 0.7, 3, 0.5);
        assert_eq!(r.kind, RegimeKind::III);
        assert!(!r.confident);
    }

    #[test]
    fn axis_application() {
        let mut p = SimParams { threshold: 0.2, p_ext: 0.009, tau0: 7.0, sigma: 30.0 };
        Axis::TauBar.apply(&mut p, 50.0).unwrap();
        assert_eq!(p.sigma, 43.0);
        assert!(Axis::TauBar.apply(&mut p, 5.0).is_err());
        assert!(Axis::PExt.apply(&mut p, 1.5).is_err());
    }

    fn small_net() -> NetworkConfig {
        NetworkConfig {
            tier_sizes: [6, 60, 420, 840],
            q_within: [1.0, 0.7, 0.05],
            q4: None,
            target_degree: 70.0,
            seed: 0,
        }
    }

    #[test]
    fn no_extrinsic_channel_is_regime_one() {
        let policy = RegimePolicy { settle_steps: 800, recovery_steps: 400, replicates: 3, ..Default::default() };
        for threshold in [0.0, 0.05, 0.3] {
            let p = SimParams { threshold, p_ext: 0.0, tau0: 7.0, sigma: 30.0 };
            let r = classify_regime(&small_net(), &p, 0.004, &policy, 9).unwrap();
            assert_eq!(r.kind, RegimeKind::I, "t_h={threshold}");
        }
    }

    #[test]
    fn risk_map_rejects_bad_axes() {
        let a = AxisSpec::linspace(Axis::PExt, 0.0, 0.01, 3);
        let base = SimParams { threshold: 0.2, p_ext: 0.009, tau0: 7.0, sigma: 30.0 };
        let policy = RegimePolicy::default();
        assert_eq!(
            risk_map(&small_net(), &a, &a, &base, 0.004, &policy, 0),
            Err(AnalysisError::IdenticalAxes(Axis::PExt))
        );
        let short = AxisSpec::linspace(Axis::Threshold, 0.1, 0.1, 1);
        assert!(matches!(
            risk_map(&small_net(), &a, &short, &base, 0.004, &policy, 0),
            Err(AnalysisError::GridTooSmall { .. })
        ));
    }

    #[test]
    fn boundaries_and_adjacency() {
        let mk = |k| Regime::from_votes(
            match k {
                RegimeKind::I => [1, 0, 0],
                RegimeKind::II => [0, 1, 0],
                RegimeKind::III => [0, 0, 1],
            },
            0.0,
            0,
            0.5,
        );
        use RegimeKind::*;
        let kinds = [I, II, III, I, III, III];
        let map = RiskMap {
            axis1: AxisSpec::linspace(Axis::Threshold, 0.0, 1.0, 2),
            axis2: AxisSpec::linspace(Axis::TauBar, 10.0, 30.0, 3),
            p_int: 0.0,
            cells: kinds.iter().map(|&k| mk(k)).collect(),
        };
        assert_eq!(map.row(0), vec![I, II, III]);
        assert_eq!(map.adjacencies(I, III), 1);
        assert_eq!(map.adjacencies(II, III), 2);
        let b = map.boundaries();
        assert_eq!(b[0].crossing, 15.0);
        assert_eq!((b[1].from, b[1].to), (I, III));
        assert_eq!(b.len(), 3);
    }
}
