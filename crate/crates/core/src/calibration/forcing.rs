use super::TrendModel;
use crate::dynamics::ForcingSchedule;

pub const DAYS_PER_MONTH: u64 = 30;
/// Day within a month at which the monthly value is registered.
pub const MONTH_MIDPOINT: u64 = 15;

/// Trend value on day `t`, interpolated linearly between the knot values
/// placed at month midpoints and held constant beyond the first and last.
fn daily_trend(trend: &TrendModel, t: u64) -> f64 {
    let knots = trend.spline.knots();
    let values = trend.spline.fitted();
    let x = (t as f64 - MONTH_MIDPOINT as f64) / DAYS_PER_MONTH as f64;
    if x <= knots[0] {
        return values[0];
    }
    let last = knots.len() - 1;
    if x >= knots[last] {
        return values[last];
    }
    let i = knots.partition_point(|&k| k <= x) - 1;
    let w = (x - knots[i]) / (knots[i + 1] - knots[i]);
    values[i] + w * (values[i + 1] - values[i])
}

/// Daily schedule `p_bar + c * (s(t) - s_bar)` over `horizon_days`, where
/// `s_bar` is the mean of the daily trend over the same horizon so the
/// schedule averages to `p_bar` whenever nothing is clipped.
pub fn build_forcing(trend: &TrendModel, c: f64, p_bar: f64, horizon_days: u64) -> ForcingSchedule {
    let daily: Vec<f64> = (0..horizon_days).map(|t| daily_trend(trend, t)).collect();
    if daily.is_empty() {
        return ForcingSchedule::Tabulated(Vec::new());
    }
    let s_bar = daily.iter().sum::<f64>() / daily.len() as f64;
    ForcingSchedule::Tabulated(daily.iter().map(|s| (p_bar + c * (s - s_bar)).clamp(0.0, 1.0)).collect())
}
