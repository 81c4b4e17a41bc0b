//! Threshold-cascade failure/recovery dynamics on hierarchical borrower networks.
//!
//! Borrowers are agents on a four-tier random graph (group, unit, branch,
//! institution). Each day an active agent may default intrinsically with the
//! forcing probability `p_int`, or strategically with probability `p_ext` when
//! the fraction of its inactive neighbors exceeds the threshold `t_h`. Failed
//! agents reactivate after `tau0` plus an exponential delay of mean `sigma`.
//!
//! Modules:
//! - [`network`]: hierarchical graph construction, summaries and edge-list I/O
//! - [`dynamics`]: the stochastic simulation kernel and trajectory export
//! - [`analysis`]: analytic equilibria, hysteresis sweeps, regime classification,
//!   risk maps and early-warning statistics
//! - [`calibration`]: trend extraction, forcing reconstruction and
//!   method-of-moments fitting against repayment series

pub mod analysis;
pub mod calibration;
pub mod dynamics;
pub mod network;
pub mod rng;

pub use analysis::AnalysisError;
pub use calibration::CalibrationError;
pub use dynamics::ParamError;
pub use network::NetworkError;

/// Crate-level error for callers that orchestrate several modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
