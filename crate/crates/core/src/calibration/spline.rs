use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{CalibrationError, RepaymentSeries};

const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SmoothingPolicy {
    /// Leave-one-out cross-validation over the smoothing parameter.
    #[default]
    CrossValidated,
    Fixed(f64),
}

/// Natural cubic spline with knots at the observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivative at each knot; zero at both ends.
    second: Vec<f64>,
}

impl SmoothingSpline {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Fitted values at the knots.
    pub fn fitted(&self) -> &[f64] {
        &self.values
    }

    /// Cubic between knots, linear outside them.
    pub fn eval(&self, x: f64) -> f64 {
        let (t, g, s) = (&self.knots, &self.values, &self.second);
        let n = t.len();
        if n == 1 {
            return g[0];
        }
        if x <= t[0] {
            let h = t[1] - t[0];
            let slope = (g[1] - g[0]) / h - h * s[1] / 6.0;
            return g[0] + slope * (x - t[0]);
        }
        if x >= t[n - 1] {
            let h = t[n - 1] - t[n - 2];
            let slope = (g[n - 1] - g[n - 2]) / h + h * s[n - 2] / 6.0;
            return g[n - 1] + slope * (x - t[n - 1]);
        }
        let i = t.partition_point(|&k| k <= x) - 1;
        let h = t[i + 1] - t[i];
        let (a, b) = (x - t[i], t[i + 1] - x);
        (a * g[i + 1] + b * g[i]) / h - a * b / 6.0 * ((1.0 + a / h) * s[i + 1] + (1.0 + b / h) * s[i])
    }
}

/// Trend extracted from a repayment series.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendModel {
    /// Evaluated on the month offsets of the series.
    pub spline: SmoothingSpline,
    /// Mean of the trend over the observation times.
    pub mean: f64,
    pub lambda: f64,
    /// Leave-one-out score at `lambda`.
    pub cv_score: f64,
}

impl TrendModel {
    pub fn eval(&self, month_offset: f64) -> f64 {
        self.spline.eval(month_offset)
    }

    pub fn residuals(&self, series: &RepaymentSeries) -> Vec<f64> {
        series.values.iter().zip(self.spline.fitted()).map(|(y, g)| y - g).collect()
    }
}

/// Penalized least squares with penalty `lambda * integral(g''^2)`, solved
/// through the eigenbasis of the penalty matrix so that every candidate
/// `lambda` costs O(n^2).
struct Smoother {
    x: Vec<f64>,
    y: DVector<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    basis: DMatrix<f64>,
    eig: DVector<f64>,
    /// `y` in the eigenbasis.
    proj: DVector<f64>,
}

impl Smoother {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let mut q = DMatrix::zeros(n, n - 2);
        let mut r = DMatrix::zeros(n - 2, n - 2);
        for j in 1..n - 1 {
            let c = j - 1;
            q[(j - 1, c)] = 1.0 / h[j - 1];
            q[(j, c)] = -1.0 / h[j - 1] - 1.0 / h[j];
            q[(j + 1, c)] = 1.0 / h[j];
            r[(c, c)] = (h[j - 1] + h[j]) / 3.0;
            if c + 1 < n - 2 {
                r[(c, c + 1)] = h[j] / 6.0;
                r[(c + 1, c)] = h[j] / 6.0;
            }
        }
        let chol = r.clone().cholesky().expect("tridiagonal penalty matrix is positive definite");
        let k = &q * chol.solve(&q.transpose());
        let k = (&k + k.transpose()) * 0.5;
        let SymmetricEigen { eigenvectors, eigenvalues } = SymmetricEigen::new(k);
        // The penalty vanishes exactly on straight lines; pin those two
        // eigenvalues to zero so a huge lambda cannot amplify rounding.
        let mut eig = eigenvalues.map(|d| d.max(0.0));
        let mut order: Vec<usize> = (0..eig.len()).collect();
        order.sort_by(|&a, &b| eig[a].total_cmp(&eig[b]));
        for &i in &order[..2] {
            eig[i] = 0.0;
        }
        let y = DVector::from_column_slice(y);
        let proj = eigenvectors.transpose() * &y;
        Smoother { x: x.to_vec(), y, q, r, basis: eigenvectors, eig, proj }
    }

    fn shrink(&self, lambda: f64) -> DVector<f64> {
        self.eig.map(|d| 1.0 / (1.0 + lambda * d))
    }

    fn fitted(&self, lambda: f64) -> DVector<f64> {
        &self.basis * self.proj.component_mul(&self.shrink(lambda))
    }

    fn loocv(&self, lambda: f64) -> f64 {
        let w = self.shrink(lambda);
        let g = &self.basis * self.proj.component_mul(&w);
        let n = self.x.len();
        let mut total = 0.0;
        for i in 0..n {
            let s_ii: f64 = self.basis.row(i).iter().zip(w.iter()).map(|(u, w)| u * u * w).sum();
            let r = (self.y[i] - g[i]) / (1.0 - s_ii).max(1e-12);
            total += r * r;
        }
        total / n as f64
    }

    fn spline(&self, lambda: f64) -> SmoothingSpline {
        let g = self.fitted(lambda);
        let inner = self.r.clone().cholesky().unwrap().solve(&(self.q.transpose() * &g));
        let mut second = vec![0.0; self.x.len()];
        second[1..self.x.len() - 1].copy_from_slice(inner.as_slice());
        SmoothingSpline { knots: self.x.clone(), values: g.as_slice().to_vec(), second }
    }
}

/// Cubic smoothing spline through `series` against month offsets.
pub fn fit_trend(series: &RepaymentSeries, policy: SmoothingPolicy) -> Result<TrendModel, CalibrationError> {
    if series.len() < MIN_POINTS {
        return Err(CalibrationError::TooShort { len: series.len(), needed: MIN_POINTS });
    }
    let smoother = Smoother::new(&series.offsets(), &series.values);
    let lambda = match policy {
        SmoothingPolicy::Fixed(l) if l >= 0.0 && l.is_finite() => l,
        SmoothingPolicy::Fixed(l) => {
            return Err(CalibrationError::Config(format!("smoothing parameter {l} must be finite and >= 0")))
        }
        SmoothingPolicy::CrossValidated => select_lambda(&smoother),
    };
    let spline = smoother.spline(lambda);
    let mean = spline.fitted().iter().sum::<f64>() / series.len() as f64;
    Ok(TrendModel { cv_score: smoother.loocv(lambda), spline, mean, lambda })
}

/// Grid search in log10(lambda), then golden-section refinement inside the
/// bracket around the best grid point.
fn select_lambda(s: &Smoother) -> f64 {
    let (lo, hi, steps) = (-4.0, 12.0, 65);
    let grid: Vec<f64> = (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect();
    let score = |e: f64| s.loocv(10f64.powf(e));
    let scores: Vec<f64> = grid.iter().map(|&e| score(e)).collect();
    let best = (0..steps).min_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps - 1)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (score(c), score(d));
    while b - a > 1e-4 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = score(d);
        }
    }
    let refined = (a + b) / 2.0;
    let e = if score(refined) <= scores[best] { refined } else { grid[best] };
    10f64.powf(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series(values: Vec<f64>) -> RepaymentSeries {
        RepaymentSeries::from_values(values).unwrap()
    }

    #[test]
    fn linear_data_is_reproduced() {
        let s = series((0..40).map(|k| 0.9 + 0.001 * k as f64).collect());
        for policy in [SmoothingPolicy::CrossValidated, SmoothingPolicy::Fixed(5.0)] {
            let t = fit_trend(&s, policy).unwrap();
            assert!(t.residuals(&s).iter().all(|r| r.abs() < 1e-8));
            assert!((t.eval(50.0) - 0.95).abs() < 1e-8);
            assert!((t.eval(12.5) - 0.9125).abs() < 1e-8);
        }
    }

    #[test]
    fn interpolates_when_unpenalized() {
        let values: Vec<f64> = (0..12).map(|k| 0.5 + 0.1 * ((k * 7 % 5) as f64)).collect();
        let t = fit_trend(&series(values.clone()), SmoothingPolicy::Fixed(0.0)).unwrap();
        for (k, v) in values.iter().enumerate() {
            assert!((t.eval(k as f64) - v).abs() < 1e-9);
        }
        // continuity of value and slope across a knot
        let eps = 1e-7;
        assert!((t.eval(4.0 - eps) - t.eval(4.0 + eps)).abs() < 1e-6);
        let slope = |x: f64| (t.eval(x + eps) - t.eval(x - eps)) / (2.0 * eps);
        assert!((slope(4.0 - 1e-4) - slope(4.0 + 1e-4)).abs() < 1e-3);
    }

    #[test]
    fn heavy_penalty_gives_least_squares_line() {
        let values: Vec<f64> = (0..30).map(|k| 0.5 + 0.01 * k as f64 + 0.05 * (k as f64).sin()).collect();
        let t = fit_trend(&series(values.clone()), SmoothingPolicy::Fixed(1e14)).unwrap();
        let n = values.len() as f64;
        let xm = (n - 1.0) / 2.0;
        let ym = values.iter().sum::<f64>() / n;
        let sxy: f64 = values.iter().enumerate().map(|(k, y)| (k as f64 - xm) * (y - ym)).sum();
        let sxx: f64 = (0..30).map(|k| (k as f64 - xm).powi(2)).sum();
        let slope = sxy / sxx;
        for k in 0..30 {
            assert!((t.eval(k as f64) - (ym + slope * (k as f64 - xm))).abs() < 1e-6);
        }
    }

    #[test]
    fn residuals_have_zero_mean() {
        let values: Vec<f64> = (0..50).map(|k| 0.6 + 0.1 * ((k * k % 13) as f64 / 13.0)).collect();
        let s = series(values);
        let t = fit_trend(&s, SmoothingPolicy::CrossValidated).unwrap();
        let mean = t.residuals(&s).iter().sum::<f64>() / 50.0;
        assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn recovers_sine_below_noise_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let truth: Vec<f64> = (0..128).map(|k| 0.5 + 0.2 * (k as f64 * std::f64::consts::TAU / 64.0).sin()).collect();
        let observed: Vec<f64> = truth.iter().map(|t| t + noise.sample(&mut rng)).collect();
        let t = fit_trend(&series(observed), SmoothingPolicy::CrossValidated).unwrap();
        let rmse = (truth.iter().enumerate().map(|(k, v)| (t.eval(k as f64) - v).powi(2)).sum::<f64>() / 128.0).sqrt();
        assert!(rmse < 0.05 * 0.5, "rmse {rmse}, lambda {}", t.lambda);
    }

    #[test]
    fn too_short() {
        assert_eq!(
            fit_trend(&series(vec![0.5; 7]), SmoothingPolicy::CrossValidated),
            Err(CalibrationError::TooShort { len: 7, needed: 8 })
        );
    }
}
