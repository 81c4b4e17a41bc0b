//! Trend extraction, forcing reconstruction and method-of-moments fitting
//! of the model to a monthly repayment-probability series.

mod fit;
mod forcing;
mod moments;
mod series;
mod spline;
mod synthetic;

pub use fit::{
    fit, nelder_mead, Bounds, FitConfig, FitTrace, MomentWeighting, NelderMeadConfig, NelderMeadResult,
    ParamEstimate, TraceEntry,
};
pub use forcing::{build_forcing, DAYS_PER_MONTH, MONTH_MIDPOINT};
pub use moments::{compute_moments, model_moments, model_moments_on, ModelMoments, MomentRunConfig, Moments};
pub use series::{load_series, RepaymentSeries};
pub use spline::{fit_trend, SmoothingPolicy, SmoothingSpline, TrendModel};
pub use synthetic::{grameen_like, synthetic_from_model, SyntheticSeries};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::dynamics::ParamError;
use crate::network::NetworkError;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: value {value} outside [0, 1]")]
    ValueRange { line: usize, value: f64 },
    #[error("line {line}: month does not increase")]
    NonMonotone { line: usize },
    #[error("series of length {len} is too short (need at least {needed})")]
    TooShort { len: usize, needed: usize },
    #[error("series is constant, higher moments are undefined")]
    Degenerate,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl From<std::io::Error> for CalibrationError {
    fn from(e: std::io::Error) -> Self {
        CalibrationError::Io(e.to_string())
    }
}
