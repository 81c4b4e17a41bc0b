use std::io::{self, Write};

use super::moments::{model_moments_on, ModelMoments, MomentRunConfig, Moments};
use super::{build_forcing, compute_moments, fit_trend, CalibrationError, RepaymentSeries, SmoothingPolicy, TrendModel};
use crate::analysis::build_ensemble;
use crate::dynamics::SimParams;
use crate::network::NetworkConfig;

/// Objective assigned to candidates whose runs are all constant.
const DEGENERATE_PENALTY: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    /// Extra searches started from the best point after convergence.
    pub restarts: usize,
    /// Edge length of the initial simplex in the unit cube.
    pub initial_step: f64,
    pub x_tol: f64,
    pub f_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig { max_evals: 300, restarts: 2, initial_step: 0.2, x_tol: 1e-3, f_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// The budget ran out before the last search converged.
    pub budget_exhausted: bool,
}

struct Tracked<F> {
    f: F,
    evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> f64> Tracked<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        v
    }
}

fn clamp_unit(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

/// Nelder-Mead over the unit cube `[0, 1]^d`; trial points are projected
/// onto the cube. Returns the best point evaluated.
pub fn nelder_mead(f: impl FnMut(&[f64]) -> f64, x0: &[f64], config: &NelderMeadConfig) -> NelderMeadResult {
    let d = x0.len();
    let x0 = clamp_unit(x0.to_vec());
    let mut t = Tracked { f, evals: 0, best_x: x0.clone(), best_f: f64::INFINITY };
    t.eval(&x0);
    let mut exhausted = false;

    for attempt in 0..=config.restarts {
        let origin = t.best_x.clone();
        let start_f = t.best_f;
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(origin.clone(), start_f)];
        for i in 0..d {
            if t.evals >= config.max_evals {
                break;
            }
            let mut v = origin.clone();
            // step away from the nearer face so the vertex stays distinct
            v[i] += if v[i] + config.initial_step <= 1.0 { config.initial_step } else { -config.initial_step };
            let v = clamp_unit(v);
            let fv = t.eval(&v);
            simplex.push((v, fv));
        }
        if simplex.len() < d + 1 {
            exhausted = true;
            break;
        }
        let mut converged = false;
        while t.evals < config.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (lo, hi) = (simplex[0].1, simplex[d].1);
            let diameter = simplex[1..]
                .iter()
                .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if diameter <= config.x_tol && (hi - lo).abs() <= config.f_tol * (1.0 + lo.abs()) {
                converged = true;
                break;
            }
            let centroid: Vec<f64> =
                (0..d).map(|j| simplex[..d].iter().map(|(v, _)| v[j]).sum::<f64>() / d as f64).collect();
            let toward =
                |s: f64, from: &[f64]| clamp_unit((0..d).map(|j| centroid[j] + s * (from[j] - centroid[j])).collect());
            let worst = simplex[d].0.clone();
            let xr = toward(-1.0, &worst);
            let fr = t.eval(&xr);
            if fr < simplex[0].1 {
                let xe = toward(-2.0, &worst);
                let fe = t.eval(&xe);
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
            } else {
                // outside contraction if the reflection helped at all
                let xc = toward(if fr < simplex[d].1 { -0.5 } else { 0.5 }, &worst);
                let fc = t.eval(&xc);
                if fc < fr.min(simplex[d].1) {
                    simplex[d] = (xc, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        if t.evals >= config.max_evals {
                            break;
                        }
                        let x = clamp_unit((0..d).map(|j| anchor[j] + 0.5 * (vertex.0[j] - anchor[j])).collect());
                        let fx = t.eval(&x);
                        *vertex = (x, fx);
                    }
                }
            }
        }
        if !converged {
            exhausted = true;
            break;
        }
        // a restart that brings no improvement ends the search
        if attempt > 0 && t.best_f >= start_f - config.f_tol * (1.0 + t.best_f.abs()) {
            break;
        }
    }
    NelderMeadResult { x: t.best_x, value: t.best_f, evals: t.evals, budget_exhausted: exhausted }
}

/// Search box for the fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub p_int: (f64, f64),
    pub threshold: (f64, f64),
    pub p_ext: (f64, f64),
    pub sigma: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { p_int: (1e-6, 0.05), threshold: (0.01, 0.5), p_ext: (1e-6, 0.05), sigma: (1.0, 200.0) }
    }
}

impl Bounds {
    fn check(&self) -> Result<(), CalibrationError> {
        let ok = |(lo, hi): (f64, f64), log: bool| lo.is_finite() && hi.is_finite() && lo < hi && (!log || lo > 0.0);
        if ok(self.p_int, true) && ok(self.threshold, false) && ok(self.p_ext, true) && ok(self.sigma, true) {
            Ok(())
        } else {
            Err(CalibrationError::Config(format!("invalid search bounds {self:?}")))
        }
    }

    /// Unit-cube coordinates to `[p_int, t_h, p_ext, sigma]`. Rates and
    /// sigma are searched on a log scale.
    fn decode(&self, u: &[f64]) -> [f64; 4] {
        let log = |(lo, hi): (f64, f64), t: f64| (lo.ln() + t * (hi.ln() - lo.ln())).exp();
        let lin = |(lo, hi): (f64, f64), t: f64| lo + t * (hi - lo);
        [log(self.p_int, u[0]), lin(self.threshold, u[1]), log(self.p_ext, u[2]), log(self.sigma, u[3])]
    }

    fn encode(&self, p: [f64; 4]) -> Vec<f64> {
        let log = |(lo, hi): (f64, f64), v: f64| (v.ln() - lo.ln()) / (hi.ln() - lo.ln());
        let lin = |(lo, hi): (f64, f64), v: f64| (v - lo) / (hi - lo);
        vec![log(self.p_int, p[0]), lin(self.threshold, p[1]), log(self.p_ext, p[2]), log(self.sigma, p[3])]
            .into_iter()
            .map(|x| x.clamp(0.0, 1.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentWeighting {
    /// Every moment counts with weight one.
    Equal,
    /// Each moment weighted by the inverse run-to-run variance measured at
    /// the start point, so that differences are read in units of model noise.
    InverseVariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub tau0: f64,
    pub c: f64,
    /// Simulation runs per objective evaluation.
    pub runs: usize,
    pub burn_in: u64,
    pub seed: u64,
    pub bounds: Bounds,
    /// `[p_int, t_h, p_ext, sigma]`.
    pub start: [f64; 4],
    pub weighting: MomentWeighting,
    pub smoothing: SmoothingPolicy,
    /// Trend used for the forcing instead of one fitted to the data.
    pub trend: Option<TrendModel>,
    pub network: NetworkConfig,
    pub search: NelderMeadConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tau0: 7.0,
            c: -0.125,
            runs: 20,
            burn_in: 1000,
            seed: 0,
            bounds: Bounds::default(),
            start: [1e-3, 0.2, 5e-3, 30.0],
            weighting: MomentWeighting::InverseVariance,
            smoothing: SmoothingPolicy::CrossValidated,
            trend: None,
            network: NetworkConfig::standard(),
            search: NelderMeadConfig::default(),
        }
    }
}

/// Lower limits on the per-moment noise scale used for weighting.
const WEIGHT_FLOOR: [f64; 4] = [1e-5, 1e-5, 0.05, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub p_int_bar: f64,
    pub threshold: f64,
    pub p_ext: f64,
    pub sigma: f64,
    pub tau0: f64,
    pub objective: f64,
    pub data: Moments,
    pub model: ModelMoments,
    pub weights: [f64; 4],
    /// Smoothing parameter of the trend behind the forcing.
    pub lambda: f64,
    pub evaluations: usize,
    /// Search stopped on its evaluation budget rather than converging.
    pub budget_exhausted: bool,
}

impl ParamEstimate {
    pub fn tau_bar(&self) -> f64 {
        self.tau0 + self.sigma
    }

    pub fn params(&self) -> SimParams {
        SimParams { threshold: self.threshold, p_ext: self.p_ext, tau0: self.tau0, sigma: self.sigma }
    }

    /// Estimate table followed by the data-versus-model moment comparison.
    pub fn write_report<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "parameter,value")?;
        writeln!(out, "p_int_bar,{}", self.p_int_bar)?;
        writeln!(out, "t_h,{}", self.threshold)?;
        writeln!(out, "p_ext,{}", self.p_ext)?;
        writeln!(out, "sigma,{}", self.sigma)?;
        writeln!(out, "tau0,{}", self.tau0)?;
        writeln!(out, "tau_bar,{}", self.tau_bar())?;
        writeln!(out, "objective,{}", self.objective)?;
        writeln!(out, "lambda,{}", self.lambda)?;
        writeln!(out, "evaluations,{}", self.evaluations)?;
        writeln!(out, "budget_exhausted,{}", self.budget_exhausted)?;
        writeln!(out)?;
        writeln!(out, "moment,data,model_mean,model_sd,weight")?;
        let data = self.data.to_array();
        let mean = self.model.mean.map(Moments::to_array);
        let spread = self.model.spread.map(Moments::to_array);
        let cell = |v: Option<[f64; 4]>, i: usize| v.map(|a| a[i].to_string()).unwrap_or_default();
        for (i, name) in Moments::NAMES.iter().enumerate() {
            writeln!(out, "{name},{},{},{},{}", data[i], cell(mean, i), cell(spread, i), self.weights[i])?;
        }
        out.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub eval: usize,
    /// `[p_int, t_h, p_ext, sigma]`.
    pub params: [f64; 4],
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    pub entries: Vec<TraceEntry>,
}

impl FitTrace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "eval,p_int_bar,t_h,p_ext,sigma,objective")?;
        for e in &self.entries {
            let [a, b, c, d] = e.params;
            writeln!(out, "{},{a},{b},{c},{d},{}", e.eval, e.objective)?;
        }
        out.flush()
    }
}

fn objective(data: &Moments, model: &ModelMoments, weights: &[f64; 4]) -> f64 {
    match model.mean {
        None => DEGENERATE_PENALTY,
        Some(m) => {
            let (d, m) = (data.to_array(), m.to_array());
            (0..4).map(|i| weights[i] * (d[i] - m[i]).powi(2)).sum()
        }
    }
}

/// Method-of-moments fit of `[p_int_bar, t_h, p_ext, sigma]` with `tau0`
/// and `c` held fixed. Every candidate is simulated on the same networks
/// and run seeds.
pub fn fit(series: &RepaymentSeries, config: &FitConfig) -> Result<(ParamEstimate, FitTrace), CalibrationError> {
    let data = compute_moments(&series.values)?;
    if series.months.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(CalibrationError::Config("fitting needs consecutive monthly observations".into()));
    }
    config.bounds.check()?;
    if config.runs < 2 {
        return Err(CalibrationError::Config(format!("need at least 2 runs per evaluation, got {}", config.runs)));
    }
    crate::dynamics::check_non_negative("tau0", config.tau0)?;
    let trend = match &config.trend {
        Some(t) => t.clone(),
        None => fit_trend(series, config.smoothing)?,
    };
    let months = series.len();
    let horizon = months as u64 * super::DAYS_PER_MONTH;
    let networks = build_ensemble(&config.network, config.runs, config.seed)?;
    let run_config = MomentRunConfig { runs: config.runs, months, burn_in: config.burn_in, seed: config.seed };

    let simulate = |p: [f64; 4]| {
        let params = SimParams { threshold: p[1], p_ext: p[2], tau0: config.tau0, sigma: p[3] };
        let forcing = build_forcing(&trend, config.c, p[0], horizon);
        model_moments_on(&networks, &params, &forcing, &run_config)
    };

    let weights = match config.weighting {
        MomentWeighting::Equal => [1.0; 4],
        MomentWeighting::InverseVariance => {
            let start = config.bounds.decode(&config.bounds.encode(config.start));
            let pilot = simulate(start)?;
            let spread = pilot.spread.map(Moments::to_array).unwrap_or(WEIGHT_FLOOR);
            std::array::from_fn(|i| 1.0 / spread[i].max(WEIGHT_FLOOR[i]).powi(2))
        }
    };

    let mut trace = FitTrace::default();
    let mut failure = None;
    let result = nelder_mead(
        |u| {
            let p = config.bounds.decode(u);
            let value = match simulate(p) {
                Ok(m) => objective(&data, &m, &weights),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            };
            trace.entries.push(TraceEntry { eval: trace.entries.len(), params: p, objective: value });
            value
        },
        &config.bounds.encode(config.start),
        &config.search,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let best = config.bounds.decode(&result.x);
    let model = simulate(best)?;
    Ok((
        ParamEstimate {
            p_int_bar: best[0],
            threshold: best[1],
            p_ext: best[2],
            sigma: best[3],
            tau0: config.tau0,
            objective: result.value,
            data,
            model,
            weights,
            lambda: trend.lambda,
            evaluations: result.evals,
            budget_exhausted: result.budget_exhausted,
        },
        trace,
    ))
}
