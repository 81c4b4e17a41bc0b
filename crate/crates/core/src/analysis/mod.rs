//! Analytic equilibria, the deterministic analogue, hysteresis sweeps,
//! regime classification, risk maps and early-warning statistics.

mod dfa;
mod early_warning;
mod equilibrium;
mod hysteresis;
mod regime;

pub use dfa::{dfa, dfa_with_scales, log_spaced_scales, DfaResult};
pub use early_warning::{early_warning_scan, rolling_std, EarlyWarningConfig, EarlyWarningPoint};
pub use equilibrium::{
    deterministic_trajectory, equilibrium, equilibrium_bounds, equilibrium_fraction, mean_field_fraction,
    Branch, DeterministicSeries, EquilibriumResult,
};
pub use hysteresis::{hysteresis_sweep, HysteresisConfig, HysteresisCurve, HysteresisReplicate};
pub use regime::{
    build_ensemble, classify_on, classify_regime, risk_map, Axis, AxisSpec, Boundary, Regime, RegimeKind,
    RegimePolicy, RiskMap,
};

use thiserror::Error;

use crate::dynamics::ParamError;
use crate::network::NetworkError;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("mean recovery time must be positive, got {0}")]
    NonPositiveTauBar(f64),
    #[error("{name} = {value} must lie in [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("series of length {len} is too short (need at least {needed})")]
    ShortSeries { len: usize, needed: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("invalid window or scale: {0}")]
    InvalidScale(String),
    #[error("risk-map axes must differ, both are {0}")]
    IdenticalAxes(Axis),
    #[error("axis {axis} needs at least 2 grid values, got {len}")]
    GridTooSmall { axis: Axis, len: usize },
    #[error("axis {axis} value {value} is invalid: {reason}")]
    InvalidAxisValue { axis: Axis, value: f64, reason: &'static str },
    #[error("ramp rate must be positive, got {0}")]
    NonPositiveRamp(f64),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn check_probability(name: &'static str, value: f64) -> Result<(), AnalysisError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(AnalysisError::Probability { name, value })
    }
}
