use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use cascade_core::analysis::{dfa, early_warning_scan, hysteresis_sweep, risk_map, EarlyWarningConfig, RegimeKind};
use cascade_core::calibration::{
    build_forcing, fit, fit_trend, grameen_like, load_series, FitConfig, NelderMeadConfig, RepaymentSeries,
    SmoothingPolicy,
};
use cascade_core::dynamics::{run, ForcingSchedule};
use cascade_core::network::{build_hierarchy, degree_summary, Network};
use cascade_core::rng::{derive_seed, stream, tag};
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ExperimentConfig, ForcingKind};
use crate::output::OutDir;
use crate::CliError;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

/// The configured network file, or a fresh draw seeded from the master seed.
fn network(cfg: &ExperimentConfig) -> Result<Network, CliError> {
    match &cfg.network_file {
        Some(path) => {
            let file = File::open(path).map_err(|e| invalid(format!("cannot open {}: {e}", path.display())))?;
            Network::read_edge_list(BufReader::new(file)).map_err(|e| invalid(format!("{}: {e}", path.display())))
        }
        None => {
            let seed = derive_seed(cfg.run.seed, &[tag::NETWORK, 0]);
            let net = build_hierarchy(&cfg.network.clone().with_seed(seed)).map_err(runtime)?;
            if net.config().q4_clipped {
                eprintln!(
                    "warning: q4 clipped to {}; mean degree will miss network.target_degree",
                    net.config().probs[3]
                );
            }
            Ok(net)
        }
    }
}

fn forcing(cfg: &ExperimentConfig, horizon: usize) -> Result<ForcingSchedule, CliError> {
    if let Some(s) = cfg.forcing.schedule() {
        return Ok(s);
    }
    let ForcingKind::Trend(path) = &cfg.forcing.kind else { unreachable!() };
    let series = load_series(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let trend = fit_trend(&series, SmoothingPolicy::CrossValidated).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    Ok(build_forcing(&trend, cfg.forcing.c, cfg.forcing.p_bar, horizon as u64))
}

fn check_horizon(h: usize) -> Result<(), CliError> {
    if h == 0 {
        Err(invalid("run.horizon must be >= 1"))
    } else {
        Ok(())
    }
}

pub fn generate(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let net = network(cfg)?;
    let mut result = Ok(());
    out.write("network.txt", |w| {
        result = net.write_edge_list(&mut *w);
        Ok(())
    })?;
    result.map_err(runtime)?;
    print!("{}", degree_summary(&net));
    Ok(())
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    check_horizon(cfg.run.horizon)?;
    let forcing = forcing(cfg, cfg.run.horizon)?;
    let net = network(cfg)?;
    let mut rng = stream(cfg.run.seed, &[tag::DYNAMICS, 0]);
    let traj = run(&net, &cfg.params, &forcing, cfg.run.horizon, cfg.run.initial_inactive, &mut rng).map_err(runtime)?;
    out.write("trajectory.csv", |w| traj.write_csv(w))?;
    let f = traj.f();
    let min = f.iter().copied().fold(f64::INFINITY, f64::min);
    println!("steps {}  final f {:.4}  min f {:.4}", traj.len(), f[f.len() - 1], min);
    Ok(())
}

pub fn sweep(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let net = network(cfg)?;
    let curve = hysteresis_sweep(&net, &cfg.params, &cfg.sweep).map_err(runtime)?;
    out.write("hysteresis.csv", |w| curve.write_csv(w))?;
    out.write("critical_points.csv", |w| curve.write_critical_points_csv(w))?;
    for (i, r) in curve.replicates.iter().enumerate() {
        let show = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.6}"));
        println!("replicate {i}: downward shift {}  recovery {}", show(r.downward_shift), show(r.recovery));
    }
    Ok(())
}

pub fn riskmap(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    if cfg.network_file.is_some() {
        return Err(invalid("riskmap draws its own network ensemble; unset network.file"));
    }
    let rm = &cfg.riskmap;
    let map = risk_map(&cfg.network, &rm.axis1, &rm.axis2, &cfg.params, rm.p_int, &rm.policy, cfg.run.seed)
        .map_err(runtime)?;
    out.write("riskmap.csv", |w| map.write_csv(w))?;
    out.write("boundaries.csv", |w| map.write_boundaries_csv(w))?;
    let count = |k| map.cells.iter().filter(|c| c.kind == k).count();
    println!(
        "{}x{} grid: I {}  II {}  III {}  (I-III adjacencies {})",
        rm.axis1.values.len(),
        rm.axis2.values.len(),
        count(RegimeKind::I),
        count(RegimeKind::II),
        count(RegimeKind::III),
        map.adjacencies(RegimeKind::I, RegimeKind::III)
    );
    Ok(())
}

pub fn warning(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    check_horizon(cfg.run.horizon)?;
    let net = network(cfg)?;
    let w = &cfg.warning;
    let scan = EarlyWarningConfig {
        p_ext_values: w.p_ext.clone(),
        p_int: w.p_int,
        horizon: cfg.run.horizon,
        tail_fraction: w.tail_fraction,
        window: w.window,
        replicates: cfg.run.replicates,
        seed: cfg.run.seed,
    };
    let points = early_warning_scan(&net, &cfg.params, &scan).map_err(runtime)?;
    out.write("early_warning.csv", |out| {
        writeln!(out, "p_ext,std_f,std_n_ext,mean_f")?;
        for p in &points {
            writeln!(out, "{},{},{},{}", p.p_ext, p.std_f, p.std_n_ext, p.mean_f)?;
        }
        Ok(())
    })?;
    if let Some(peak) = points.iter().max_by(|a, b| a.std_f.total_cmp(&b.std_f)) {
        println!("peak rolling s.d. of f {:.5} at p_ext {}", peak.std_f, peak.p_ext);
    }
    Ok(())
}

/// One named numeric column of a CSV file; `#` lines are skipped.
fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    let file = File::open(path).map_err(|e| invalid(format!("cannot open {}: {e}", path.display())))?;
    let mut index = None;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = text.split(',').map(str::trim).collect();
        let Some(k) = index else {
            index = Some(cols.iter().position(|&c| c == column).ok_or_else(|| {
                invalid(format!("{}: no column '{column}' in header '{text}'", path.display()))
            })?);
            continue;
        };
        let cell = cols
            .get(k)
            .ok_or_else(|| invalid(format!("{}:{}: missing column '{column}'", path.display(), i + 1)))?;
        out.push(
            cell.parse().map_err(|_| invalid(format!("{}:{}: bad number '{cell}'", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn dfa_cmd(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let d = &cfg.dfa;
    let series = match &d.input {
        Some(path) => read_column(path, &d.column)?,
        None => {
            check_horizon(cfg.run.horizon)?;
            let forcing = forcing(cfg, cfg.run.horizon)?;
            let net = network(cfg)?;
            let mut rng = stream(cfg.run.seed, &[tag::DYNAMICS, 0]);
            let traj =
                run(&net, &cfg.params, &forcing, cfg.run.horizon, cfg.run.initial_inactive, &mut rng).map_err(runtime)?;
            if d.series == "f" {
                traj.f()
            } else {
                traj.failure_counts()
            }
        }
    };
    let scale_max = d.scale_max.unwrap_or(series.len() / 4);
    let result = dfa(&series, d.scale_min, scale_max, d.n_scales).map_err(invalid)?;
    out.write("dfa.csv", |w| result.write_csv(w))?;
    println!("alpha {:.4} over {} scales ({}..={})", result.alpha, result.scales.len(), d.scale_min, scale_max);
    Ok(())
}

pub fn calibrate(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let c = &cfg.calibrate;
    let path = c.input.as_ref().ok_or_else(|| invalid("calibrate needs calibrate.input"))?;
    let series = load_series(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let fit_cfg = FitConfig {
        tau0: c.tau0,
        c: c.c,
        runs: c.runs,
        burn_in: c.burn_in,
        seed: cfg.run.seed,
        start: c.start,
        weighting: c.weighting,
        smoothing: c.smoothing,
        network: cfg.network.clone(),
        search: NelderMeadConfig { max_evals: c.max_evals, restarts: c.restarts, ..NelderMeadConfig::default() },
        ..FitConfig::default()
    };
    let (est, trace) = fit(&series, &fit_cfg).map_err(runtime)?;
    out.write("estimate.csv", |w| est.write_report(w))?;
    out.write("trace.csv", |w| trace.write_csv(w))?;
    println!(
        "p_int_bar {:.4e}  t_h {:.4}  p_ext {:.4e}  sigma {:.2}  tau_bar {:.2}  objective {:.4}{}",
        est.p_int_bar,
        est.threshold,
        est.p_ext,
        est.sigma,
        est.tau_bar(),
        est.objective,
        if est.budget_exhausted { "  (evaluation budget exhausted)" } else { "" }
    );
    Ok(())
}

/// Synthetic inputs: a repayment-like monthly series and unit white noise.
pub fn fixture(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let series: RepaymentSeries = grameen_like(cfg.run.seed).series;
    out.write("grameen_like.csv", |w| series.write(w))?;
    let mut rng = stream(cfg.run.seed, &[tag::SYNTHETIC, 1]);
    let noise: Vec<f64> = (0..1 << 14).map(|_| StandardNormal.sample(&mut rng)).collect();
    out.write("white_noise.csv", |w| {
        writeln!(w, "value")?;
        for x in &noise {
            writeln!(w, "{x}")?;
        }
        Ok(())
    })?;
    Ok(())
}
