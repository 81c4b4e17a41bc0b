/// Intrinsic failure probability as a function of the step index. Values are
/// clipped into [0, 1] on lookup.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSchedule {
    Constant(f64),
    /// Rises from `base` by `rate` per step for `half_steps` steps, then falls
    /// back at the same rate; holds `base` afterwards.
    Ramp { base: f64, rate: f64, half_steps: u64 },
    /// One value per step; the last value is held past the end.
    Tabulated(Vec<f64>),
}

impl ForcingSchedule {
    /// A ramp from 0 up to `peak` and back down at `rate` per step.
    pub fn triangle(rate: f64, peak: f64) -> Self {
        let half_steps = (peak / rate).round() as u64;
        ForcingSchedule::Ramp { base: 0.0, rate, half_steps }
    }

    pub fn at(&self, t: u64) -> f64 {
        let raw = match self {
            ForcingSchedule::Constant(p) => *p,
            ForcingSchedule::Ramp { base, rate, half_steps } => {
                let h = *half_steps;
                let k = if t <= h { t } else { (2 * h).saturating_sub(t) };
                base + rate * k as f64
            }
            ForcingSchedule::Tabulated(values) => match values.get(t as usize) {
                Some(v) => *v,
                None => values.last().copied().unwrap_or(0.0),
            },
        };
        raw.clamp(0.0, 1.0)
    }

    /// Length of one full up-and-down cycle, when the schedule has one.
    pub fn natural_horizon(&self) -> Option<u64> {
        match self {
            ForcingSchedule::Ramp { half_steps, .. } => Some(2 * half_steps + 1),
            ForcingSchedule::Tabulated(v) => Some(v.len() as u64),
            ForcingSchedule::Constant(_) => None,
        }
    }
}
