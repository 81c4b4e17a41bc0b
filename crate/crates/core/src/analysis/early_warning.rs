use rayon::prelude::*;

use super::AnalysisError;
use crate::dynamics::{init_state, SimParams};
use crate::network::Network;
use crate::rng::{self, tag};

/// Sliding-window sample standard deviation (n - 1 denominator). Element
/// `k` of the output covers `series[k..k + window]`.
pub fn rolling_std(series: &[f64], window: usize) -> Result<Vec<f64>, AnalysisError> {
    if window < 2 {
        return Err(AnalysisError::InvalidScale(format!("rolling window {window} must be >= 2")));
    }
    if series.len() < window {
        return Err(AnalysisError::ShortSeries { len: series.len(), needed: window });
    }
    Ok(series
        .windows(window)
        .map(|w| {
            let mean = w.iter().sum::<f64>() / window as f64;
            let ss: f64 = w.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (window - 1) as f64).sqrt()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EarlyWarningConfig {
    pub p_ext_values: Vec<f64>,
    pub p_int: f64,
    pub horizon: usize,
    /// Share of each run, counted from the end, treated as stationary.
    pub tail_fraction: f64,
    pub window: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl EarlyWarningConfig {
    pub fn new(p_ext_values: Vec<f64>, p_int: f64, seed: u64) -> Self {
        EarlyWarningConfig {
            p_ext_values,
            p_int,
            horizon: 5000,
            tail_fraction: 0.5,
            window: 100,
            replicates: 4,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EarlyWarningPoint {
    pub p_ext: f64,
    /// Mean rolling std of `f` over the tail, averaged over replicates.
    pub std_f: f64,
    /// Same for the extrinsically failed fraction.
    pub std_n_ext: f64,
    /// Mean `f` over the tail.
    pub mean_f: f64,
}

/// Runs from an all-active start at each `p_ext` and measures fluctuation
/// size on the stationary tail.
pub fn early_warning_scan(
    network: &Network,
    base: &SimParams,
    config: &EarlyWarningConfig,
) -> Result<Vec<EarlyWarningPoint>, AnalysisError> {
    super::check_probability("p_int", config.p_int)?;
    if config.replicates == 0 {
        return Err(AnalysisError::Config("replicates must be positive".into()));
    }
    let tail = (config.horizon as f64 * config.tail_fraction).round() as usize;
    if tail < config.window || config.window < 2 {
        return Err(AnalysisError::ShortSeries { len: tail, needed: config.window.max(2) });
    }
    let mut jobs = Vec::new();
    for (i, &p_ext) in config.p_ext_values.iter().enumerate() {
        let params = SimParams { p_ext, ..*base };
        params.validate()?;
        for r in 0..config.replicates {
            jobs.push((i, params, r));
        }
    }
    let n = network.agent_count() as f64;
    let runs = jobs
        .par_iter()
        .map(|&(i, params, r)| {
            let mut rng = rng::stream(config.seed, &[tag::DYNAMICS, i as u64, r as u64]);
            let mut state = init_state(network, 0.0, &params, &mut rng);
            let mut f = Vec::with_capacity(tail);
            let mut n_ext = Vec::with_capacity(tail);
            for t in 0..config.horizon {
                let rec = state.step(network, &params, config.p_int, &mut rng);
                if t >= config.horizon - tail {
                    f.push(rec.active as f64 / n);
                    n_ext.push(rec.n_ext as f64 / n);
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let sf = mean(&rolling_std(&f, config.window)?);
            let se = mean(&rolling_std(&n_ext, config.window)?);
            Ok((sf, se, mean(&f)))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    let reps = config.replicates as f64;
    Ok(config
        .p_ext_values
        .iter()
        .enumerate()
        .map(|(i, &p_ext)| {
            let chunk = &runs[i * config.replicates..(i + 1) * config.replicates];
            EarlyWarningPoint {
                p_ext,
                std_f: chunk.iter().map(|c| c.0).sum::<f64>() / reps,
                std_n_ext: chunk.iter().map(|c| c.1).sum::<f64>() / reps,
                mean_f: chunk.iter().map(|c| c.2).sum::<f64>() / reps,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_zero() {
        assert!(rolling_std(&[3.5; 20], 5).unwrap().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn alternating_pairs() {
        let s: Vec<f64> = (0..11).map(|i| (i % 2) as f64).collect();
        let r = rolling_std(&s, 2).unwrap();
        assert_eq!(r.len(), 10);
        assert!(r.iter().all(|&v| (v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15));
    }

    #[test]
    fn matches_direct_formula() {
        let s = [1.0, 4.0, 2.0, 8.0, 5.0];
        let r = rolling_std(&s, 3).unwrap();
        // window {4, 2, 8}: mean 14/3, deviations -2/3, -8/3, 10/3
        let expected = ((4.0 + 64.0 + 100.0) / 9.0 / 2.0f64).sqrt();
        assert!((r[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(rolling_std(&[1.0, 2.0], 1), Err(AnalysisError::InvalidScale(_))));
        assert_eq!(rolling_std(&[1.0, 2.0], 3), Err(AnalysisError::ShortSeries { len: 2, needed: 3 }));
    }
}
