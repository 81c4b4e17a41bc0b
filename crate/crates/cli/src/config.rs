//! Plain-text experiment configuration: `[block]` headers followed by
//! `key = value` lines. Every key has a default; unknown blocks or keys are
//! rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cascade_core::analysis::{Axis, AxisSpec, HysteresisConfig, RegimePolicy};
use cascade_core::calibration::{MomentWeighting, SmoothingPolicy};
use cascade_core::dynamics::{ForcingSchedule, SimParams};
use cascade_core::network::NetworkConfig;
use sha2::{Digest, Sha256};

use crate::CliError;

/// `(block, key, default)`.
const KEYS: &[(&str, &str, &str)] = &[
    ("network", "tier_sizes", "6,60,420,10080"),
    ("network", "q", "1,0.7,0.05"),
    ("network", "q4", "auto"),
    ("network", "target_degree", "100"),
    ("network", "file", ""),
    ("params", "t_h", "0.2"),
    ("params", "p_ext", "0.009"),
    ("params", "tau0", "7"),
    ("params", "sigma", "30"),
    ("forcing", "kind", "constant"),
    ("forcing", "p_int", "0.004"),
    ("forcing", "rate", "3.854e-6"),
    ("forcing", "peak", "0.006"),
    ("forcing", "series", ""),
    ("forcing", "c", "-0.125"),
    ("forcing", "p_bar", "3.7e-4"),
    ("run", "horizon", "5000"),
    ("run", "replicates", "10"),
    ("run", "seed", "1"),
    ("run", "initial_inactive", "0"),
    ("output", "dir", "out"),
    ("output", "gnuplot", "false"),
    ("sweep", "ramp_rate", "3.854e-6"),
    ("sweep", "p_int_max", "0.006"),
    ("sweep", "persistence", "20"),
    ("sweep", "min_gap", "0.02"),
    ("riskmap", "axis1", "t_h:0.1:0.5:10"),
    ("riskmap", "axis2", "tau_bar:8:100:10"),
    ("riskmap", "p_int", "0.004"),
    ("riskmap", "settle_steps", "5000"),
    ("riskmap", "recovery_steps", "5000"),
    ("riskmap", "vote_threshold", "0.5"),
    ("warning", "p_ext", "0.001:0.012:12"),
    ("warning", "p_int", "0.004"),
    ("warning", "window", "100"),
    ("warning", "tail_fraction", "0.5"),
    ("dfa", "input", ""),
    ("dfa", "column", "value"),
    ("dfa", "series", "f"),
    ("dfa", "scale_min", "8"),
    ("dfa", "scale_max", "auto"),
    ("dfa", "n_scales", "12"),
    ("calibrate", "input", ""),
    ("calibrate", "runs", "20"),
    ("calibrate", "burn_in", "1000"),
    ("calibrate", "max_evals", "300"),
    ("calibrate", "restarts", "2"),
    ("calibrate", "start", "1e-3,0.2,5e-3,30"),
    ("calibrate", "weighting", "inverse_variance"),
    ("calibrate", "smoothing", "cv"),
    ("calibrate", "tau0", "7"),
    ("calibrate", "c", "-0.125"),
];

fn is_known(block: &str, key: &str) -> bool {
    KEYS.iter().any(|&(b, k, _)| b == block && k == key)
}

/// Key/value pairs keyed by `block.key`, over the defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig { values: KEYS.iter().map(|&(b, k, v)| (format!("{b}.{k}"), v.to_string())).collect() }
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RawConfig::default();
        let mut seen = BTreeMap::new();
        let mut block: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|&(b, _, _)| b == name) {
                    return Err(CliError::Validation(format!("line {lineno}: unknown block [{name}]")));
                }
                block = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!("line {lineno}: expected 'key = value', found '{line}'")));
            };
            let Some(block) = &block else {
                return Err(CliError::Validation(format!("line {lineno}: key outside any [block]")));
            };
            let dotted = format!("{block}.{}", key.trim());
            if let Some(first) = seen.insert(dotted.clone(), lineno) {
                return Err(CliError::Validation(format!("line {lineno}: {dotted} already set on line {first}")));
            }
            cfg.set(&dotted, value.trim()).map_err(|e| CliError::Validation(format!("line {lineno}: {e}")))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `block.key`; rejects keys that do not exist.
    pub fn set(&mut self, dotted: &str, value: &str) -> Result<(), String> {
        let known = dotted.split_once('.').is_some_and(|(b, k)| is_known(b, k));
        if !known {
            return Err(format!("unknown key '{dotted}'"));
        }
        self.values.insert(dotted.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, dotted: &str) -> &str {
        self.values.get(dotted).map(String::as_str).unwrap_or_else(|| panic!("no default for {dotted}"))
    }

    /// The fully resolved config, one `block.key = value` per line in a
    /// fixed order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// The same settings as a config file, blocks in their usual order.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for &(block, key, _) in KEYS {
            if block != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                writeln!(out, "[{block}]").unwrap();
                current = block;
            }
            writeln!(out, "{key} = {}", self.get(&format!("{block}.{key}"))).unwrap();
        }
        out
    }

    /// Hash of the canonical text minus `output.dir`, so the same experiment
    /// written to two places carries the same hash.
    pub fn sha256(&self) -> String {
        let mut hashed = self.clone();
        hashed.values.remove("output.dir");
        Sha256::digest(hashed.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn parse_value<T: std::str::FromStr>(&self, dotted: &str) -> Result<T, CliError> {
        let v = self.get(dotted);
        v.parse().map_err(|_| CliError::Validation(format!("{dotted}: cannot parse '{v}'")))
    }

    fn list<T: std::str::FromStr>(&self, dotted: &str, len: usize) -> Result<Vec<T>, CliError> {
        let v = self.get(dotted);
        let items: Vec<T> = v
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Validation(format!("{dotted}: cannot parse '{v}'")))?;
        if items.len() != len {
            return Err(CliError::Validation(format!("{dotted}: expected {len} comma-separated values, got {}", items.len())));
        }
        Ok(items)
    }

    fn path(&self, dotted: &str) -> Option<PathBuf> {
        let v = self.get(dotted);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    fn flag(&self, dotted: &str) -> Result<bool, CliError> {
        match self.get(dotted) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(CliError::Validation(format!("{dotted}: expected true or false, got '{v}'"))),
        }
    }

    /// `name:min:max:n`.
    fn axis(&self, dotted: &str) -> Result<AxisSpec, CliError> {
        let v = self.get(dotted);
        let bad = || CliError::Validation(format!("{dotted}: expected 'axis:min:max:n', got '{v}'"));
        let parts: Vec<&str> = v.split(':').map(str::trim).collect();
        let [name, min, max, n] = parts[..] else { return Err(bad()) };
        let axis = Axis::parse(name)
            .ok_or_else(|| CliError::Validation(format!("{dotted}: unknown axis '{name}' (t_h, p_ext, tau_bar)")))?;
        let (min, max, n) = (min.parse().map_err(|_| bad())?, max.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?);
        Ok(AxisSpec::linspace(axis, min, max, n))
    }

    fn range(&self, dotted: &str) -> Result<Vec<f64>, CliError> {
        let v = self.get(dotted);
        let bad = || CliError::Validation(format!("{dotted}: expected 'min:max:n', got '{v}'"));
        let parts: Vec<&str> = v.split(':').map(str::trim).collect();
        let [min, max, n] = parts[..] else { return Err(bad()) };
        let (min, max, n): (f64, f64, usize) =
            (min.parse().map_err(|_| bad())?, max.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?);
        if n == 0 {
            return Err(bad());
        }
        Ok(AxisSpec::linspace(Axis::PExt, min, max, n).values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingKind {
    Constant,
    Ramp,
    /// Trend of a repayment series, turned into a daily schedule.
    Trend(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingBlock {
    pub kind: ForcingKind,
    pub p_int: f64,
    pub rate: f64,
    pub peak: f64,
    pub c: f64,
    pub p_bar: f64,
}

impl ForcingBlock {
    /// The schedule for the constant and ramp kinds.
    pub fn schedule(&self) -> Option<ForcingSchedule> {
        match self.kind {
            ForcingKind::Constant => Some(ForcingSchedule::Constant(self.p_int)),
            ForcingKind::Ramp => Some(ForcingSchedule::triangle(self.rate, self.peak)),
            ForcingKind::Trend(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunBlock {
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
    pub initial_inactive: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarningBlock {
    pub p_ext: Vec<f64>,
    pub p_int: f64,
    pub window: usize,
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfaBlock {
    pub input: Option<PathBuf>,
    pub column: String,
    /// Simulated series to analyze when there is no input: `f` or `failures`.
    pub series: String,
    pub scale_min: usize,
    pub scale_max: Option<usize>,
    pub n_scales: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateBlock {
    pub input: Option<PathBuf>,
    pub runs: usize,
    pub burn_in: u64,
    pub max_evals: usize,
    pub restarts: usize,
    pub start: [f64; 4],
    pub weighting: MomentWeighting,
    pub smoothing: SmoothingPolicy,
    pub tau0: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskMapBlock {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub p_int: f64,
    pub policy: RegimePolicy,
}

/// Typed view of a [`RawConfig`], checked against each module's
/// preconditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub network_file: Option<PathBuf>,
    pub params: SimParams,
    pub forcing: ForcingBlock,
    pub run: RunBlock,
    pub out_dir: PathBuf,
    pub gnuplot: bool,
    pub sweep: HysteresisConfig,
    pub riskmap: RiskMapBlock,
    pub warning: WarningBlock,
    pub dfa: DfaBlock,
    pub calibrate: CalibrateBlock,
}

fn probability(name: &str, v: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} = {v} must lie in [0, 1]")))
    }
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(name: &str, v: T) -> Result<T, CliError> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let sizes: Vec<usize> = raw.list("network.tier_sizes", 4)?;
        let q: Vec<f64> = raw.list("network.q", 3)?;
        let q4 = match raw.get("network.q4") {
            "auto" => None,
            _ => Some(raw.parse_value("network.q4")?),
        };
        let run = RunBlock {
            horizon: raw.parse_value("run.horizon")?,
            replicates: positive("run.replicates", raw.parse_value("run.replicates")?)?,
            seed: raw.parse_value("run.seed")?,
            initial_inactive: probability("run.initial_inactive", raw.parse_value("run.initial_inactive")?)?,
        };
        let network = NetworkConfig {
            tier_sizes: [sizes[0], sizes[1], sizes[2], sizes[3]],
            q_within: [q[0], q[1], q[2]],
            q4,
            target_degree: raw.parse_value("network.target_degree")?,
            seed: 0,
        };
        network.resolve().map_err(|e| CliError::Validation(format!("network: {e}")))?;

        let params = SimParams::new(
            raw.parse_value("params.t_h")?,
            raw.parse_value("params.p_ext")?,
            raw.parse_value("params.tau0")?,
            raw.parse_value("params.sigma")?,
        )
        .map_err(|e| CliError::Validation(format!("params: {e}")))?;

        let kind = match raw.get("forcing.kind") {
            "constant" => ForcingKind::Constant,
            "ramp" => ForcingKind::Ramp,
            "trend" => ForcingKind::Trend(
                raw.path("forcing.series")
                    .ok_or_else(|| CliError::Validation("forcing.kind = trend needs forcing.series".into()))?,
            ),
            other => {
                return Err(CliError::Validation(format!("forcing.kind: expected constant, ramp or trend, got '{other}'")))
            }
        };
        let forcing = ForcingBlock {
            kind,
            p_int: probability("forcing.p_int", raw.parse_value("forcing.p_int")?)?,
            rate: positive("forcing.rate", raw.parse_value("forcing.rate")?)?,
            peak: probability("forcing.peak", raw.parse_value("forcing.peak")?)?,
            c: raw.parse_value("forcing.c")?,
            p_bar: probability("forcing.p_bar", raw.parse_value("forcing.p_bar")?)?,
        };

        let mut sweep = HysteresisConfig::new(
            positive("sweep.ramp_rate", raw.parse_value("sweep.ramp_rate")?)?,
            probability("sweep.p_int_max", raw.parse_value("sweep.p_int_max")?)?,
            run.replicates,
            run.seed,
        );
        sweep.persistence = raw.parse_value("sweep.persistence")?;
        sweep.min_gap = raw.parse_value("sweep.min_gap")?;

        let policy = RegimePolicy {
            settle_steps: positive("riskmap.settle_steps", raw.parse_value("riskmap.settle_steps")?)?,
            recovery_steps: raw.parse_value("riskmap.recovery_steps")?,
            replicates: run.replicates,
            vote_threshold: probability("riskmap.vote_threshold", raw.parse_value("riskmap.vote_threshold")?)?,
            ..RegimePolicy::default()
        };
        let riskmap = RiskMapBlock {
            axis1: raw.axis("riskmap.axis1")?,
            axis2: raw.axis("riskmap.axis2")?,
            p_int: probability("riskmap.p_int", raw.parse_value("riskmap.p_int")?)?,
            policy,
        };
        if riskmap.axis1.axis == riskmap.axis2.axis {
            return Err(CliError::Validation(format!("riskmap: both axes are {}", riskmap.axis1.axis)));
        }
        for a in [&riskmap.axis1, &riskmap.axis2] {
            if a.values.len() < 2 {
                return Err(CliError::Validation(format!("riskmap: axis {} needs at least 2 values", a.axis)));
            }
        }

        let warning = WarningBlock {
            p_ext: raw.range("warning.p_ext")?,
            p_int: probability("warning.p_int", raw.parse_value("warning.p_int")?)?,
            window: raw.parse_value("warning.window")?,
            tail_fraction: probability("warning.tail_fraction", raw.parse_value("warning.tail_fraction")?)?,
        };
        for &p in &warning.p_ext {
            probability("warning.p_ext", p)?;
        }

        let series = raw.get("dfa.series").to_string();
        if series != "f" && series != "failures" {
            return Err(CliError::Validation(format!("dfa.series: expected f or failures, got '{series}'")));
        }
        let dfa = DfaBlock {
            input: raw.path("dfa.input"),
            column: raw.get("dfa.column").to_string(),
            series,
            scale_min: raw.parse_value("dfa.scale_min")?,
            scale_max: match raw.get("dfa.scale_max") {
                "auto" => None,
                _ => Some(raw.parse_value("dfa.scale_max")?),
            },
            n_scales: positive("dfa.n_scales", raw.parse_value("dfa.n_scales")?)?,
        };

        let start: Vec<f64> = raw.list("calibrate.start", 4)?;
        let calibrate = CalibrateBlock {
            input: raw.path("calibrate.input"),
            runs: raw.parse_value("calibrate.runs")?,
            burn_in: raw.parse_value("calibrate.burn_in")?,
            max_evals: positive("calibrate.max_evals", raw.parse_value("calibrate.max_evals")?)?,
            restarts: raw.parse_value("calibrate.restarts")?,
            start: [start[0], start[1], start[2], start[3]],
            weighting: match raw.get("calibrate.weighting") {
                "equal" => MomentWeighting::Equal,
                "inverse_variance" => MomentWeighting::InverseVariance,
                other => {
                    return Err(CliError::Validation(format!(
                        "calibrate.weighting: expected equal or inverse_variance, got '{other}'"
                    )))
                }
            },
            smoothing: match raw.get("calibrate.smoothing") {
                "cv" => SmoothingPolicy::CrossValidated,
                _ => SmoothingPolicy::Fixed(raw.parse_value("calibrate.smoothing")?),
            },
            tau0: raw.parse_value("calibrate.tau0")?,
            c: raw.parse_value("calibrate.c")?,
        };
        if calibrate.runs < 2 {
            return Err(CliError::Validation(format!("calibrate.runs must be at least 2, got {}", calibrate.runs)));
        }

        Ok(ExperimentConfig {
            network,
            network_file: raw.path("network.file"),
            params,
            forcing,
            run,
            out_dir: PathBuf::from(raw.get("output.dir")),
            gnuplot: raw.flag("output.gnuplot")?,
            sweep,
            riskmap,
            warning,
            dfa,
            calibrate,
        })
    }
}
