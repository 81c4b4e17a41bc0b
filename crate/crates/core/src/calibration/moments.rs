use rayon::prelude::*;

use super::forcing::{DAYS_PER_MONTH, MONTH_MIDPOINT};
use super::CalibrationError;
use crate::dynamics::{init_state, ForcingSchedule, SimParams};
use crate::network::{build_hierarchy, Network, NetworkConfig};
use crate::rng::{self, derive_seed, tag};

/// Mean, standard deviation and standardized third and fourth central
/// moments (population normalization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
    pub skew: f64,
    pub kurt: f64,
}

impl Moments {
    pub fn to_array(self) -> [f64; 4] {
        [self.mean, self.sd, self.skew, self.kurt]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Moments { mean: a[0], sd: a[1], skew: a[2], kurt: a[3] }
    }

    pub const NAMES: [&'static str; 4] = ["mean", "sd", "skew", "kurt"];
}

pub fn compute_moments(series: &[f64]) -> Result<Moments, CalibrationError> {
    if series.len() < 4 {
        return Err(CalibrationError::TooShort { len: series.len(), needed: 4 });
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 <= 0.0 || series.iter().all(|&x| x == series[0]) {
        return Err(CalibrationError::Degenerate);
    }
    Ok(Moments { mean, sd: m2.sqrt(), skew: m3 / m2.powf(1.5), kurt: m4 / (m2 * m2) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRunConfig {
    pub runs: usize,
    /// Monthly observations per run; matches the data length.
    pub months: usize,
    /// Days simulated at the first forcing value before observation starts.
    pub burn_in: u64,
    pub seed: u64,
}

impl MomentRunConfig {
    pub fn new(runs: usize, months: usize, seed: u64) -> Self {
        MomentRunConfig { runs, months, burn_in: 2000, seed }
    }
}

/// Moments across simulation runs. Runs whose sampled series is constant
/// are counted in `degenerate_runs` and left out of the summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMoments {
    pub per_run: Vec<Option<Moments>>,
    /// Mean over non-degenerate runs.
    pub mean: Option<Moments>,
    /// Sample standard deviation over non-degenerate runs.
    pub spread: Option<Moments>,
    pub degenerate_runs: usize,
}

impl ModelMoments {
    fn from_runs(per_run: Vec<Option<Moments>>) -> Self {
        let valid: Vec<[f64; 4]> = per_run.iter().flatten().map(|m| m.to_array()).collect();
        let degenerate_runs = per_run.len() - valid.len();
        let (mean, spread) = if valid.len() >= 2 {
            let k = valid.len() as f64;
            let mut mean = [0.0; 4];
            let mut var = [0.0; 4];
            for i in 0..4 {
                mean[i] = valid.iter().map(|v| v[i]).sum::<f64>() / k;
                var[i] = valid.iter().map(|v| (v[i] - mean[i]).powi(2)).sum::<f64>() / (k - 1.0);
            }
            (Some(Moments::from_array(mean)), Some(Moments::from_array(var.map(f64::sqrt))))
        } else {
            (None, None)
        };
        ModelMoments { per_run, mean, spread, degenerate_runs }
    }

    /// Too few non-constant runs to summarize.
    pub fn is_degenerate(&self) -> bool {
        self.mean.is_none()
    }
}

fn check(config: &MomentRunConfig, params: &SimParams) -> Result<(), CalibrationError> {
    params.validate()?;
    if config.runs < 2 {
        return Err(CalibrationError::Config(format!("need at least 2 runs, got {}", config.runs)));
    }
    if config.months < 4 {
        return Err(CalibrationError::TooShort { len: config.months, needed: 4 });
    }
    Ok(())
}

/// One run: burn-in, then `f` sampled at each month midpoint.
pub(crate) fn sample_run(
    network: &Network,
    params: &SimParams,
    forcing: &ForcingSchedule,
    config: &MomentRunConfig,
    run: u64,
) -> Vec<f64> {
    let mut rng = rng::stream(config.seed, &[tag::DYNAMICS, run]);
    let mut state = init_state(network, 0.0, params, &mut rng);
    let p0 = forcing.at(0);
    for _ in 0..config.burn_in {
        state.step(network, params, p0, &mut rng);
    }
    let mut out = Vec::with_capacity(config.months);
    for day in 0..config.months as u64 * DAYS_PER_MONTH {
        state.step(network, params, forcing.at(day), &mut rng);
        if day % DAYS_PER_MONTH == MONTH_MIDPOINT {
            out.push(state.active_fraction());
        }
    }
    out
}

/// Runs on a fresh network per run, built from `network_config` with a seed
/// derived from the run index.
pub fn model_moments(
    params: &SimParams,
    forcing: &ForcingSchedule,
    network_config: &NetworkConfig,
    config: &MomentRunConfig,
) -> Result<ModelMoments, CalibrationError> {
    check(config, params)?;
    network_config.resolve()?;
    let per_run = (0..config.runs as u64)
        .into_par_iter()
        .map(|r| {
            let net = build_hierarchy(&network_config.clone().with_seed(derive_seed(config.seed, &[tag::NETWORK, r])))?;
            Ok(compute_moments(&sample_run(&net, params, forcing, config, r)).ok())
        })
        .collect::<Result<Vec<_>, CalibrationError>>()?;
    Ok(ModelMoments::from_runs(per_run))
}

/// Same as [`model_moments`] on a prebuilt ensemble; run `r` uses
/// `networks[r % networks.len()]`.
pub fn model_moments_on(
    networks: &[Network],
    params: &SimParams,
    forcing: &ForcingSchedule,
    config: &MomentRunConfig,
) -> Result<ModelMoments, CalibrationError> {
    check(config, params)?;
    if networks.is_empty() {
        return Err(CalibrationError::Config("empty network ensemble".into()));
    }
    let per_run = (0..config.runs)
        .into_par_iter()
        .map(|r| compute_moments(&sample_run(&networks[r % networks.len()], params, forcing, config, r as u64)).ok())
        .collect();
    Ok(ModelMoments::from_runs(per_run))
}
