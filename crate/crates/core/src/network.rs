//! Four-tier hierarchical random graph of borrowers.
//!
//! Agents are laid out in index blocks: agents `0..n1` form group 0, agents
//! `0..n2` form unit 0, and so on. Each unordered pair is linked independently
//! with the probability of the closest tier the two agents share.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::rng::{self, for_each_bernoulli, tag};

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("tier sizes {0:?} are not nested: each size must be positive and divide the next")]
    NotNested([usize; 4]),
    #[error("probability q{index} = {value} is outside [0, 1]")]
    ProbabilityRange { index: usize, value: f64 },
    #[error("tier probabilities {0:?} must be non-increasing from group to institution")]
    ProbabilityOrder([f64; 4]),
    #[error("target degree must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error("expected degree {expected} exceeds the maximum possible {max}")]
    DegreeTooLarge { expected: f64, max: usize },
    #[error("edge-list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for NetworkError {
    fn from(e: std::io::Error) -> Self {
        NetworkError::Io(e.to_string())
    }
}

/// Tier layout and linking probabilities. `q4 = None` means "solve for the
/// between-branch probability that yields `target_degree`".
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Group, unit, branch and institution sizes in agents.
    pub tier_sizes: [usize; 4],
    /// q1, q2, q3: same group, same unit, same branch.
    pub q_within: [f64; 3],
    pub q4: Option<f64>,
    pub target_degree: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::standard()
    }
}

impl NetworkConfig {
    /// 6 per group, 10 groups per unit, 7 units per branch, 24 branches;
    /// q = (1, 0.7, 0.05) with q4 solved for a mean degree of 100.
    pub fn standard() -> Self {
        Self {
            tier_sizes: [6, 60, 420, 10080],
            q_within: [1.0, 0.7, 0.05],
            q4: None,
            target_degree: 100.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn agent_count(&self) -> usize {
        self.tier_sizes[3]
    }

    /// Validates the config and fills in q4.
    pub fn resolve(&self) -> Result<ResolvedConfig, NetworkError> {
        check_nesting(&self.tier_sizes)?;
        for (i, &q) in self.q_within.iter().enumerate() {
            check_probability(i + 1, q)?;
        }
        let (q4, q4_clipped) = match self.q4 {
            Some(q4) => {
                check_probability(4, q4)?;
                (q4, false)
            }
            None => {
                let max = self.tier_sizes[3] - 1;
                if self.target_degree > max as f64 {
                    return Err(NetworkError::DegreeTooLarge { expected: self.target_degree, max });
                }
                let sol = solve_q4(self.tier_sizes, self.q_within, self.target_degree)?;
                (sol.q4, sol.clipped)
            }
        };
        let probs = [self.q_within[0], self.q_within[1], self.q_within[2], q4];
        if probs.windows(2).any(|w| w[0] < w[1]) {
            return Err(NetworkError::ProbabilityOrder(probs));
        }
        Ok(ResolvedConfig { tier_sizes: self.tier_sizes, probs, seed: self.seed, q4_clipped })
    }
}

/// A config with every probability fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedConfig {
    pub tier_sizes: [usize; 4],
    pub probs: [f64; 4],
    pub seed: u64,
    /// Set when the solved q4 had to be clipped into [0, 1].
    pub q4_clipped: bool,
}

impl ResolvedConfig {
    /// Number of partners each agent has in each tier: `n1 - 1`,
    /// `n2 - n1`, `n3 - n2`, `n4 - n3`.
    pub fn tier_partner_counts(&self) -> [usize; 4] {
        let n = self.tier_sizes;
        [n[0] - 1, n[1] - n[0], n[2] - n[1], n[3] - n[2]]
    }

    pub fn expected_degree(&self) -> f64 {
        self.tier_partner_counts()
            .iter()
            .zip(self.probs)
            .map(|(&m, q)| m as f64 * q)
            .sum()
    }

    /// Standard error of the realized mean degree over one network draw.
    pub fn mean_degree_stderr(&self) -> f64 {
        let n = self.tier_sizes[3] as f64;
        let var_pair_sum: f64 = self
            .tier_partner_counts()
            .iter()
            .zip(self.probs)
            .map(|(&m, q)| m as f64 * q * (1.0 - q))
            .sum();
        (2.0 * var_pair_sum / n).sqrt()
    }
}

fn check_nesting(n: &[usize; 4]) -> Result<(), NetworkError> {
    let ok = n[0] >= 1 && n.windows(2).all(|w| w[1] >= w[0] && w[1] % w[0] == 0);
    if ok {
        Ok(())
    } else {
        Err(NetworkError::NotNested(*n))
    }
}

fn check_probability(index: usize, value: f64) -> Result<(), NetworkError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(NetworkError::ProbabilityRange { index, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q4Solution {
    pub q4: f64,
    /// The unconstrained solution fell outside [0, 1].
    pub clipped: bool,
}

/// Solves `(n1-1)q1 + (n2-n1)q2 + (n3-n2)q3 + (n4-n3)q4 = target_degree`
/// for q4, clipping the result into [0, 1].
pub fn solve_q4(
    tier_sizes: [usize; 4],
    q_within: [f64; 3],
    target_degree: f64,
) -> Result<Q4Solution, NetworkError> {
    check_nesting(&tier_sizes)?;
    if !(target_degree > 0.0) {
        return Err(NetworkError::NonPositiveTarget(target_degree));
    }
    let n = tier_sizes;
    let within = (n[0] - 1) as f64 * q_within[0]
        + (n[1] - n[0]) as f64 * q_within[1]
        + (n[2] - n[1]) as f64 * q_within[2];
    let between = (n[3] - n[2]) as f64;
    let residual = target_degree - within;
    // Exact balance up to rounding in the sum above.
    if residual.abs() <= 1e-9 * target_degree.max(1.0) {
        return Ok(Q4Solution { q4: 0.0, clipped: false });
    }
    if between == 0.0 {
        return Ok(Q4Solution { q4: 0.0, clipped: true });
    }
    let raw = residual / between;
    Ok(Q4Solution { q4: raw.clamp(0.0, 1.0), clipped: !(0.0..=1.0).contains(&raw) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Membership {
    pub group: usize,
    pub unit: usize,
    pub branch: usize,
}

/// Immutable undirected simple graph in compressed sparse row form with
/// sorted neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: ResolvedConfig,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Network {
    pub fn config(&self) -> &ResolvedConfig {
        &self.config
    }

    pub fn agent_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, agent: usize) -> &[u32] {
        &self.neighbors[self.offsets[agent]..self.offsets[agent + 1]]
    }

    #[inline]
    pub fn degree(&self, agent: usize) -> usize {
        self.offsets[agent + 1] - self.offsets[agent]
    }

    pub fn membership(&self, agent: usize) -> Membership {
        let n = self.config.tier_sizes;
        Membership { group: agent / n[0], unit: agent / n[1], branch: agent / n[2] }
    }

    /// Closest shared tier of two distinct agents: 0 group, 1 unit,
    /// 2 branch, 3 institution.
    pub fn shared_tier(&self, a: usize, b: usize) -> usize {
        let n = self.config.tier_sizes;
        (0..3).find(|&k| a / n[k] == b / n[k]).unwrap_or(3)
    }

    /// Iterates each undirected edge once as `(low, high)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.agent_count()).flat_map(move |a| {
            self.neighbors(a)
                .iter()
                .map(|&b| b as usize)
                .filter(move |&b| b > a)
                .map(move |b| (a, b))
        })
    }

    /// An arbitrary simple graph outside the tier layout (all agents share one
    /// group). Duplicate edges are merged; self-loops and out-of-range ids
    /// are rejected.
    pub fn from_edges(
        agent_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, NetworkError> {
        let mut list = Vec::new();
        for (a, b) in edges {
            if a == b || a >= agent_count || b >= agent_count {
                return Err(NetworkError::Parse { line: 0, message: format!("invalid edge {a} {b}") });
            }
            list.push((a.min(b) as u32, a.max(b) as u32));
        }
        list.sort_unstable();
        list.dedup();
        let n = agent_count.max(1);
        let config = ResolvedConfig { tier_sizes: [n, n, n, n], probs: [0.0; 4], seed: 0, q4_clipped: false };
        let mut net = Network::from_sorted_edges(config, &list);
        if agent_count == 0 {
            net.offsets.truncate(1);
        }
        Ok(net)
    }

    /// Builds the adjacency from edges listed in increasing `(low, high)` order.
    fn from_sorted_edges(config: ResolvedConfig, edges: &[(u32, u32)]) -> Self {
        let n = config.tier_sizes[3];
        let mut degree = vec![0usize; n];
        for &(a, b) in edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        // With edges sorted by (low, high), every list is filled in
        // ascending order: lower partners arrive before higher ones.
        for &(a, b) in edges {
            neighbors[cursor[a as usize]] = b;
            cursor[a as usize] += 1;
            neighbors[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }
        Network { config, offsets, neighbors }
    }

    /// Writes the header block and edge list. Probabilities use the shortest
    /// round-trip representation so a reread network is bit-identical.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<(), NetworkError> {
        let c = &self.config;
        let mut header = String::new();
        writeln!(header, "# cascade-network 1").unwrap();
        writeln!(
            header,
            "# tier_sizes {} {} {} {}",
            c.tier_sizes[0], c.tier_sizes[1], c.tier_sizes[2], c.tier_sizes[3]
        )
        .unwrap();
        writeln!(header, "# probabilities {:?} {:?} {:?} {:?}", c.probs[0], c.probs[1], c.probs[2], c.probs[3])
            .unwrap();
        writeln!(header, "# seed {}", c.seed).unwrap();
        writeln!(header, "# agents {}", self.agent_count()).unwrap();
        writeln!(header, "# edges {}", self.edge_count()).unwrap();
        out.write_all(header.as_bytes())?;
        let mut line = String::with_capacity(24);
        for (a, b) in self.edges() {
            line.clear();
            writeln!(line, "{a} {b}").unwrap();
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self, NetworkError> {
        let mut tier_sizes = None;
        let mut probs = None;
        let mut seed = None;
        let mut agents = None;
        let mut edge_total = None;
        let mut edges: Vec<(u32, u32)> = Vec::new();
        let parse_err = |line: usize, message: String| NetworkError::Parse { line, message };

        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                let key = parts.next().unwrap_or("");
                let values: Vec<&str> = parts.collect();
                match key {
                    "cascade-network" => {}
                    // run metadata written by front ends
                    k if k.starts_with('@') => {}
                    "tier_sizes" => {
                        let v = parse_four::<usize>(&values).map_err(|m| parse_err(lineno, m))?;
                        tier_sizes = Some(v);
                    }
                    "probabilities" => {
                        let v = parse_four::<f64>(&values).map_err(|m| parse_err(lineno, m))?;
                        probs = Some(v);
                    }
                    "seed" => seed = Some(parse_one::<u64>(&values).map_err(|m| parse_err(lineno, m))?),
                    "agents" => agents = Some(parse_one::<usize>(&values).map_err(|m| parse_err(lineno, m))?),
                    "edges" => edge_total = Some(parse_one::<usize>(&values).map_err(|m| parse_err(lineno, m))?),
                    other => return Err(parse_err(lineno, format!("unknown header key '{other}'"))),
                }
                continue;
            }
            let n = agents.ok_or_else(|| parse_err(lineno, "edge before '# agents' header".into()))?;
            let mut parts = line.split_whitespace();
            let (a, b) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(parse_err(lineno, format!("expected two agent ids, got '{line}'"))),
            };
            let a: u32 = a.parse().map_err(|_| parse_err(lineno, format!("bad agent id '{a}'")))?;
            let b: u32 = b.parse().map_err(|_| parse_err(lineno, format!("bad agent id '{b}'")))?;
            if a >= b || b as usize >= n {
                return Err(parse_err(lineno, format!("edge {a} {b} must satisfy low < high < {n}")));
            }
            if let Some(&prev) = edges.last() {
                if prev >= (a, b) {
                    return Err(parse_err(lineno, "edges must be strictly increasing".into()));
                }
            }
            edges.push((a, b));
        }

        let missing = |what: &str| parse_err(0, format!("missing '# {what}' header"));
        let tier_sizes = tier_sizes.ok_or_else(|| missing("tier_sizes"))?;
        let probs = probs.ok_or_else(|| missing("probabilities"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;
        let agents = agents.ok_or_else(|| missing("agents"))?;
        check_nesting(&tier_sizes)?;
        if agents != tier_sizes[3] {
            return Err(parse_err(0, format!("agents {agents} does not match n4 {}", tier_sizes[3])));
        }
        if let Some(total) = edge_total {
            if total != edges.len() {
                return Err(parse_err(0, format!("header promises {total} edges, found {}", edges.len())));
            }
        }
        let config = ResolvedConfig { tier_sizes, probs, seed, q4_clipped: false };
        Ok(Network::from_sorted_edges(config, &edges))
    }
}

fn parse_one<T: std::str::FromStr>(values: &[&str]) -> Result<T, String> {
    match values {
        [v] => v.parse().map_err(|_| format!("cannot parse '{v}'")),
        _ => Err(format!("expected one value, got {}", values.len())),
    }
}

fn parse_four<T: std::str::FromStr + Copy + Default>(values: &[&str]) -> Result<[T; 4], String> {
    if values.len() != 4 {
        return Err(format!("expected four values, got {}", values.len()));
    }
    let mut out = [T::default(); 4];
    for (slot, v) in out.iter_mut().zip(values) {
        *slot = v.parse().map_err(|_| format!("cannot parse '{v}'"))?;
    }
    Ok(out)
}

/// Builds the network for `config`, drawing every pair independently.
/// Deterministic for a fixed `config.seed`.
pub fn build_hierarchy(config: &NetworkConfig) -> Result<Network, NetworkError> {
    let resolved = config.resolve()?;
    let mut rng = rng::stream(resolved.seed, &[tag::NETWORK]);
    Ok(build_resolved(resolved, &mut rng))
}

/// Builds from a resolved config with a caller-supplied generator.
pub fn build_resolved<R: Rng + ?Sized>(config: ResolvedConfig, rng: &mut R) -> Network {
    let n = config.tier_sizes;
    let total = n[3];
    let expected_edges = (config.expected_degree() * total as f64 / 2.0) as usize;
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(expected_edges + expected_edges / 16 + 16);
    for a in 0..total {
        let mut start = a + 1;
        for tier in 0..4 {
            let end = if tier == 3 { total } else { (a / n[tier] + 1) * n[tier] };
            if end > start {
                for_each_bernoulli(rng, end - start, config.probs[tier], |k| {
                    edges.push((a as u32, (start + k) as u32));
                });
                start = end;
            }
        }
    }
    Network::from_sorted_edges(config, &edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierEdgeCount {
    pub expected: f64,
    pub realized: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSummary {
    pub agent_count: usize,
    pub edge_count: usize,
    pub mean_degree: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    pub expected_mean_degree: f64,
    /// Indexed by closest shared tier: group, unit, branch, institution.
    pub tiers: [TierEdgeCount; 4],
}

pub fn degree_summary(network: &Network) -> DegreeSummary {
    let n = network.agent_count();
    let degrees = (0..n).map(|a| network.degree(a));
    let min_degree = degrees.clone().min().unwrap_or(0);
    let max_degree = degrees.max().unwrap_or(0);
    let mut realized = [0usize; 4];
    for (a, b) in network.edges() {
        realized[network.shared_tier(a, b)] += 1;
    }
    let cfg = network.config();
    let partners = cfg.tier_partner_counts();
    let tiers = std::array::from_fn(|k| TierEdgeCount {
        expected: n as f64 * partners[k] as f64 * cfg.probs[k] / 2.0,
        realized: realized[k],
    });
    DegreeSummary {
        agent_count: n,
        edge_count: network.edge_count(),
        mean_degree: if n == 0 { 0.0 } else { 2.0 * network.edge_count() as f64 / n as f64 },
        min_degree,
        max_degree,
        expected_mean_degree: cfg.expected_degree(),
        tiers,
    }
}

impl std::fmt::Display for DegreeSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "agents        {}", self.agent_count)?;
        writeln!(f, "edges         {}", self.edge_count)?;
        writeln!(
            f,
            "mean degree   {:.3} (expected {:.3})",
            self.mean_degree, self.expected_mean_degree
        )?;
        writeln!(f, "degree range  {}..={}", self.min_degree, self.max_degree)?;
        for (name, t) in ["group", "unit", "branch", "institution"].iter().zip(&self.tiers) {
            writeln!(f, "{name:<12}  expected {:>12.1}  realized {:>9}", t.expected, t.realized)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tier_sizes: [usize; 4], q: [f64; 4], seed: u64) -> NetworkConfig {
        NetworkConfig {
            tier_sizes,
            q_within: [q[0], q[1], q[2]],
            q4: Some(q[3]),
            target_degree: 1.0,
            seed,
        }
    }

    #[test]
    fn q4_for_default_layout() {
        let sol = solve_q4([6, 60, 420, 10080], [1.0, 0.7, 0.05], 100.0).unwrap();
        assert!((sol.q4 - 39.2 / 9660.0).abs() < 1e-15);
        assert!(!sol.clipped);
    }

    #[test]
    fn q4_zero_when_within_branch_meets_target() {
        let sol = solve_q4([6, 60, 420, 10080], [1.0, 0.7, 0.05], 60.8).unwrap();
        assert_eq!(sol.q4, 0.0);
        let sol = solve_q4([6, 12, 24, 48], [1.0, 0.0, 0.0], 5.0).unwrap();
        assert_eq!(sol.q4, 0.0);
        assert!(!sol.clipped);
    }

    #[test]
    fn q4_clips_with_flag() {
        let sol = solve_q4([6, 12, 24, 48], [1.0, 0.0, 0.0], 3.0).unwrap();
        assert_eq!(sol, Q4Solution { q4: 0.0, clipped: true });
        let sol = solve_q4([2, 4, 8, 16], [1.0, 1.0, 1.0], 40.0).unwrap();
        assert_eq!(sol, Q4Solution { q4: 1.0, clipped: true });
    }

    #[test]
    fn q4_rejects_bad_input() {
        assert_eq!(
            solve_q4([6, 50, 420, 10080], [1.0, 0.7, 0.05], 100.0),
            Err(NetworkError::NotNested([6, 50, 420, 10080]))
        );
        assert_eq!(
            solve_q4([6, 60, 420, 10080], [1.0, 0.7, 0.05], 0.0),
            Err(NetworkError::NonPositiveTarget(0.0))
        );
    }

    #[test]
    fn resolve_rejects_invalid_configs() {
        assert!(matches!(
            cfg([6, 12, 24, 24], [1.0, 1.2, 0.0, 0.0], 0).resolve(),
            Err(NetworkError::ProbabilityRange { index: 2, .. })
        ));
        assert!(matches!(
            cfg([6, 12, 24, 24], [0.5, 0.7, 0.0, 0.0], 0).resolve(),
            Err(NetworkError::ProbabilityOrder(_))
        ));
        let mut c = NetworkConfig::standard();
        c.tier_sizes = [6, 60, 420, 1000];
        assert!(matches!(c.resolve(), Err(NetworkError::NotNested(_))));
        let mut c = NetworkConfig::standard();
        c.target_degree = 20000.0;
        assert!(matches!(c.resolve(), Err(NetworkError::DegreeTooLarge { .. })));
    }

    #[test]
    fn disjoint_cliques() {
        let net = build_hierarchy(&cfg([6, 12, 24, 24], [1.0, 0.0, 0.0, 0.0], 3)).unwrap();
        assert!((0..24).all(|a| net.degree(a) == 5));
        for a in 0..24 {
            assert!(net.neighbors(a).iter().all(|&b| b as usize / 6 == a / 6));
        }
        let s = degree_summary(&net);
        assert_eq!((s.mean_degree, s.min_degree, s.max_degree), (5.0, 5, 5));
        assert_eq!(s.tiers[0].realized, 4 * 15);
    }

    #[test]
    fn complete_graph() {
        let net = build_hierarchy(&cfg([2, 4, 8, 8], [1.0; 4], 0)).unwrap();
        assert!((0..8).all(|a| net.degree(a) == 7));
        assert_eq!(net.edge_count(), 28);
    }

    #[test]
    fn empty_graph() {
        let net = build_hierarchy(&cfg([2, 4, 8, 16], [0.0; 4], 0)).unwrap();
        let s = degree_summary(&net);
        assert_eq!(s.mean_degree, 0.0);
        assert_eq!(s.max_degree, 0);
    }

    #[test]
    fn shared_tier_and_membership() {
        let net = build_hierarchy(&cfg([2, 4, 8, 16], [0.0; 4], 0)).unwrap();
        assert_eq!(net.shared_tier(0, 1), 0);
        assert_eq!(net.shared_tier(0, 3), 1);
        assert_eq!(net.shared_tier(0, 7), 2);
        assert_eq!(net.shared_tier(0, 8), 3);
        assert_eq!(net.membership(9), Membership { group: 4, unit: 2, branch: 1 });
    }

    #[test]
    fn adjacency_is_symmetric_irreflexive_and_sorted() {
        for seed in 0..20 {
            let net = build_hierarchy(&cfg([3, 6, 12, 48], [0.9, 0.5, 0.3, 0.1], seed)).unwrap();
            for a in 0..net.agent_count() {
                let nb = net.neighbors(a);
                assert!(nb.windows(2).all(|w| w[0] < w[1]));
                for &b in nb {
                    assert_ne!(b as usize, a);
                    assert!(net.neighbors(b as usize).binary_search(&(a as u32)).is_ok());
                }
            }
        }
    }

    #[test]
    fn same_seed_same_network() {
        let c = cfg([6, 60, 420, 840], [1.0, 0.7, 0.05, 0.01], 11);
        assert_eq!(build_hierarchy(&c).unwrap(), build_hierarchy(&c).unwrap());
        let other = build_hierarchy(&c.clone().with_seed(12)).unwrap();
        assert_ne!(build_hierarchy(&c).unwrap(), other);
    }

    #[test]
    fn edge_list_round_trip() {
        let net = build_hierarchy(&cfg([6, 60, 420, 840], [1.0, 0.7, 0.05, 0.0123], 5)).unwrap();
        let mut buf = Vec::new();
        net.write_edge_list(&mut buf).unwrap();
        let back = Network::read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(back.offsets, net.offsets);
        assert_eq!(back.neighbors, net.neighbors);
        assert_eq!(back.config.probs, net.config.probs);
        let mut again = Vec::new();
        back.write_edge_list(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        let text = "# cascade-network 1\n# tier_sizes 2 4 8 8\n# probabilities 1 1 1 1\n# seed 0\n# agents 8\n0 1\n3 2\n";
        match Network::read_edge_list(text.as_bytes()) {
            Err(NetworkError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn metadata_lines_are_skipped() {
        let text = "# @version 1\n# cascade-network 1\n# tier_sizes 2 4 8 8\n# probabilities 1 1 1 1\n# seed 0\n# agents 8\n0 1\n";
        assert_eq!(Network::read_edge_list(text.as_bytes()).unwrap().edge_count(), 1);
        let text = "# bogus 1\n";
        assert!(Network::read_edge_list(text.as_bytes()).is_err());
    }
}
