use super::{check_probability, AnalysisError};

/// Effective per-step failure probability of an active agent when a
/// fraction `e` of agents sits in a critically inactive neighborhood.
/// Intrinsic failures take priority over extrinsic ones.
fn failure_rate(p_int: f64, p_ext: f64, e: f64) -> f64 {
    p_int + e * p_ext - e * p_int * p_ext
}

fn check_inputs(p_int: f64, p_ext: f64, e: f64, tau_bar: f64) -> Result<(), AnalysisError> {
    check_probability("p_int", p_int)?;
    check_probability("p_ext", p_ext)?;
    check_probability("E", e)?;
    if !(tau_bar > 0.0) {
        return Err(AnalysisError::NonPositiveTauBar(tau_bar));
    }
    Ok(())
}

/// Balance of failure and recovery flows:
/// `f* = 1 / (1 + (p_int + E p_ext - E p_int p_ext) tau_bar)`.
pub fn equilibrium_fraction(p_int: f64, p_ext: f64, e: f64, tau_bar: f64) -> Result<f64, AnalysisError> {
    check_inputs(p_int, p_ext, e, tau_bar)?;
    Ok(1.0 / (1.0 + failure_rate(p_int, p_ext, e) * tau_bar))
}

/// First-order expansion of [`equilibrium_fraction`], valid while
/// `p_int tau_bar` and `E p_ext tau_bar` are small.
pub fn mean_field_fraction(p_int: f64, p_ext: f64, e: f64, tau_bar: f64) -> f64 {
    1.0 - failure_rate(p_int, p_ext, e) * tau_bar
}

/// High-f (`E = 0`) and low-f (`E = 1`) equilibria.
pub fn equilibrium_bounds(p_int: f64, p_ext: f64, tau_bar: f64) -> Result<(f64, f64), AnalysisError> {
    Ok((equilibrium_fraction(p_int, p_ext, 0.0, tau_bar)?, equilibrium_fraction(p_int, p_ext, 1.0, tau_bar)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    High,
    Low,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumResult {
    pub f_star: f64,
    pub branch: Branch,
    pub e_used: f64,
}

pub fn equilibrium(p_int: f64, p_ext: f64, e: f64, tau_bar: f64) -> Result<EquilibriumResult, AnalysisError> {
    let f_star = equilibrium_fraction(p_int, p_ext, e, tau_bar)?;
    let branch = if e == 0.0 {
        Branch::High
    } else if e == 1.0 {
        Branch::Low
    } else {
        Branch::Intermediate
    };
    Ok(EquilibriumResult { f_star, branch, e_used: e })
}

/// Fractions of active, intrinsically failed and extrinsically failed
/// agents under the deterministic analogue.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicSeries {
    pub f: Vec<f64>,
    pub n_int: Vec<f64>,
    pub n_ext: Vec<f64>,
}

/// Evaluates the deterministic analogue for `horizon` steps given the
/// probability of a critically inactive neighborhood at each step.
pub fn deterministic_trajectory(
    p_int: f64,
    p_ext: f64,
    tau_bar: f64,
    e_schedule: impl Fn(usize) -> f64,
    horizon: usize,
) -> Result<DeterministicSeries, AnalysisError> {
    check_inputs(p_int, p_ext, 0.0, tau_bar)?;
    let mut out = DeterministicSeries {
        f: Vec::with_capacity(horizon),
        n_int: Vec::with_capacity(horizon),
        n_ext: Vec::with_capacity(horizon),
    };
    for t in 0..horizon {
        let e = e_schedule(t);
        check_probability("E", e)?;
        let f = 1.0 / (1.0 + (p_int + e * (p_ext - p_int * p_ext)) * tau_bar);
        out.f.push(f);
        out.n_int.push(tau_bar * f * p_int);
        out.n_ext.push(tau_bar * f * (1.0 - p_int) * e * p_ext);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(equilibrium_fraction(0.0, 0.3, 0.0, 50.0).unwrap(), 1.0);
        // 1 / (1 + 0.148)
        assert!((equilibrium_fraction(0.004, 0.009, 0.0, 37.0).unwrap() - 0.8711).abs() < 5e-5);
        // 1 / (1 + 0.013964 * 37)
        assert!((equilibrium_fraction(0.004, 0.009, 1.0, 37.0).unwrap() - 0.6758).abs() < 5e-5);
        assert!((mean_field_fraction(0.004, 0.009, 0.0, 37.0) - 0.852).abs() < 1e-12);
        assert_eq!(mean_field_fraction(0.0, 0.5, 0.0, 10.0), 1.0);
        let exact = equilibrium_fraction(0.001, 0.009, 0.0, 37.0).unwrap();
        let approx = mean_field_fraction(0.001, 0.009, 0.0, 37.0);
        assert!((approx - 0.963).abs() < 1e-12);
        assert!((exact - 0.9643).abs() < 5e-5);
        assert!((exact - approx).abs() < 0.002);
    }

    #[test]
    fn rejects_bad_tau_bar() {
        assert_eq!(equilibrium_fraction(0.1, 0.1, 0.0, 0.0), Err(AnalysisError::NonPositiveTauBar(0.0)));
        assert!(deterministic_trajectory(0.1, 0.1, -1.0, |_| 0.0, 3).is_err());
    }

    #[test]
    fn branch_tags() {
        assert_eq!(equilibrium(0.004, 0.009, 0.0, 37.0).unwrap().branch, Branch::High);
        assert_eq!(equilibrium(0.004, 0.009, 1.0, 37.0).unwrap().branch, Branch::Low);
        assert_eq!(equilibrium(0.004, 0.009, 0.4, 37.0).unwrap().branch, Branch::Intermediate);
    }

    #[test]
    fn deterministic_fixed_points() {
        let s = deterministic_trajectory(0.0, 0.0, 37.0, |_| 0.0, 10).unwrap();
        assert!(s.f.iter().all(|&f| f == 1.0));
        assert!(s.n_int.iter().chain(&s.n_ext).all(|&n| n == 0.0));

        let s = deterministic_trajectory(0.004, 0.009, 37.0, |_| 0.0, 10).unwrap();
        assert!(s.f.iter().all(|&f| (f - 0.8711).abs() < 5e-5));
        assert!(s.n_int.iter().all(|&n| (n - 0.1289).abs() < 5e-5));
        assert!(s.n_ext.iter().all(|&n| n == 0.0));

        let s = deterministic_trajectory(0.004, 0.009, 37.0, |_| 1.0, 10).unwrap();
        assert!((s.f[0] - 0.6758).abs() < 5e-5);
        assert!((s.n_ext[0] - 37.0 * s.f[0] * 0.996 * 0.009).abs() < 1e-15);
        assert!((s.n_ext[0] - 0.2241).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn deterministic_conserves(p_int in 0.0..0.05f64, p_ext in 0.0..0.1f64, tau in 1.0..200.0f64, seed in 0u64..1000) {
            let e = |t: usize| ((t as u64 * 2654435761 + seed) % 1000) as f64 / 999.0;
            let s = deterministic_trajectory(p_int, p_ext, tau, e, 50).unwrap();
            for t in 0..50 {
                prop_assert!((s.f[t] + s.n_int[t] + s.n_ext[t] - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn decreasing_in_each_argument(p_int in 0.0..0.05f64, p_ext in 0.001..0.1f64, e in 0.01..1.0f64, tau in 1.0..200.0f64, bump in 1.01..2.0f64) {
            let base = equilibrium_fraction(p_int, p_ext, e, tau).unwrap();
            prop_assert!(equilibrium_fraction((p_int * bump + 1e-4).min(1.0), p_ext, e, tau).unwrap() < base);
            prop_assert!(equilibrium_fraction(p_int, p_ext, (e * bump).min(1.0).max(e + 1e-3).min(1.0), tau).unwrap() <= base);
            prop_assert!(equilibrium_fraction(p_int, (p_ext * bump).min(1.0), e, tau).unwrap() < base);
            prop_assert!(equilibrium_fraction(p_int, p_ext, e, tau * bump).unwrap() < base);
        }

        #[test]
        fn bounded_by_branches(p_int in 0.0..0.05f64, p_ext in 0.0..0.1f64, e in 0.0..=1.0f64, tau in 1.0..200.0f64) {
            let (hi, lo) = equilibrium_bounds(p_int, p_ext, tau).unwrap();
            let f = equilibrium_fraction(p_int, p_ext, e, tau).unwrap();
            prop_assert!(hi >= f && f >= lo);
            prop_assert!(f > 0.0 && f <= 1.0);
        }

        #[test]
        fn mean_field_remainder(p_int in 0.0..0.02f64, p_ext in 0.0..0.05f64, e in 0.0..=1.0f64, tau in 1.0..60.0f64) {
            let x = (p_int + e * p_ext) * tau;
            prop_assume!(x < 0.5);
            let exact = equilibrium_fraction(p_int, p_ext, e, tau).unwrap();
            let approx = mean_field_fraction(p_int, p_ext, e, tau);
            prop_assert!((exact - approx).abs() <= x * x + 1e-15);
        }
    }
}
