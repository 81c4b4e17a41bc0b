use super::AnalysisError;

#[derive(Debug, Clone, PartialEq)]
pub struct DfaResult {
    pub scales: Vec<usize>,
    pub fluctuation: Vec<f64>,
    pub alpha: f64,
    /// Index range into `scales` used for the fit, inclusive.
    pub fit_range: (usize, usize),
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

impl DfaResult {
    /// `l,F_l` rows with the exponent in a leading comment.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# alpha={} fit_range={}..={} residual={}", self.alpha, self.fit_range.0, self.fit_range.1, self.residual)?;
        writeln!(out, "l,F_l")?;
        for (l, f) in self.scales.iter().zip(&self.fluctuation) {
            writeln!(out, "{l},{f}")?;
        }
        out.flush()
    }
}

/// Distinct integer scales spaced evenly in log between `min` and `max`.
pub fn log_spaced_scales(min: usize, max: usize, n: usize) -> Vec<usize> {
    if n == 0 || min == 0 || max < min {
        return Vec::new();
    }
    if n == 1 {
        return vec![min];
    }
    let (lo, hi) = ((min as f64).ln(), (max as f64).ln());
    let mut out: Vec<usize> =
        (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp().round() as usize).collect();
    out.dedup();
    out
}

/// DFA1 over log-spaced scales; the fit skips the smallest scale.
pub fn dfa(series: &[f64], scale_min: usize, scale_max: usize, n_scales: usize) -> Result<DfaResult, AnalysisError> {
    let scales = log_spaced_scales(scale_min, scale_max, n_scales);
    let fit_from = if scales.len() > 2 { 1 } else { 0 };
    dfa_with_scales(series, &scales, fit_from)
}

/// DFA1 at the given scales, fitting `log F` against `log l` from
/// `scales[fit_from]` upward.
pub fn dfa_with_scales(series: &[f64], scales: &[usize], fit_from: usize) -> Result<DfaResult, AnalysisError> {
    if scales.len() < 2 || fit_from + 2 > scales.len() {
        return Err(AnalysisError::InvalidScale(format!(
            "need at least two scales in the fit range, got {} from index {fit_from}",
            scales.len()
        )));
    }
    if let Some(&bad) = scales.iter().find(|&&l| l < 3) {
        return Err(AnalysisError::InvalidScale(format!("scale {bad} is below 3")));
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::InvalidScale("scales must be strictly increasing".into()));
    }
    let max = *scales.last().unwrap();
    if series.len() < 4 * max {
        return Err(AnalysisError::ShortSeries { len: series.len(), needed: 4 * max });
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    if series.iter().all(|&x| x == mean) || series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    let mut profile = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for &x in series {
        acc += x - mean;
        profile.push(acc);
    }

    let fluctuation: Vec<f64> = scales.iter().map(|&l| fluctuation_at(&profile, l)).collect();
    let xs: Vec<f64> = scales[fit_from..].iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = fluctuation[fit_from..].iter().map(|f| f.ln()).collect();
    let (alpha, intercept) = least_squares(&xs, &ys);
    let residual =
        (xs.iter().zip(&ys).map(|(x, y)| (y - alpha * x - intercept).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    Ok(DfaResult {
        scales: scales.to_vec(),
        fluctuation,
        alpha,
        fit_range: (fit_from, scales.len() - 1),
        residual,
    })
}

/// RMS residual after removing a least-squares line from each
/// non-overlapping window of length `l`.
fn fluctuation_at(profile: &[f64], l: usize) -> f64 {
    let windows = profile.len() / l;
    // Centered abscissa: sum(x) = 0, sum(x^2) = l(l^2 - 1)/12.
    let half = (l as f64 - 1.0) / 2.0;
    let sxx = l as f64 * ((l * l) as f64 - 1.0) / 12.0;
    let mut total = 0.0;
    for w in profile.chunks_exact(l).take(windows) {
        let ybar = w.iter().sum::<f64>() / l as f64;
        let sxy: f64 = w.iter().enumerate().map(|(i, y)| (i as f64 - half) * (y - ybar)).sum();
        let slope = sxy / sxx;
        total += w
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let r = y - ybar - slope * (i as f64 - half);
                r * r
            })
            .sum::<f64>();
    }
    (total / (windows * l) as f64).sqrt()
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
