use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),

    #[error("no fusion solution: masses ({m_a}, {m_b}) -> {m_c} violate the triangle condition")]
    NoFusionSolution { m_a: f64, m_b: f64, m_c: f64 },

    #[error("fusion ({m_a}, {m_b}) -> {m_c} is at threshold; angles degenerate")]
    FusionThreshold { m_a: f64, m_b: f64, m_c: f64 },

    #[error("fusion ({alpha}{beta}) -> {gamma} failed: {source}")]
    FusionProcess {
        alpha: u32,
        beta: u32,
        gamma: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid model size N = {n}: {reason}")]
    InvalidN { n: u32, reason: &'static str },

    #[error("particle type {index} is not in 1..{n}")]
    InvalidParticle { index: u32, n: u32 },

    #[error("evaluation at {at} is within {radius:e} of the pole at {pole}")]
    PoleProximity {
        at: Complex64,
        pole: Complex64,
        radius: f64,
    },

    #[error("component S^{{{alpha}{beta}}} has not been constructed")]
    DependencyMissing { alpha: u32, beta: u32 },

    #[error("pole refinement did not converge near {near} (last step {step:e})")]
    PoleRefinementFailure { near: Complex64, step: f64 },

    #[error("no admissible residue contour around {pole}: {reason}")]
    ContourConflict { pole: Complex64, reason: String },

    #[error("eta calibration failed: relative residual {residual:e}")]
    CalibrationFailure { residual: f64, curve: Vec<f64> },

    #[error("analyticity margin violated: {reason}")]
    DomainError { reason: String },

    #[error("quadrature did not converge (error estimate {estimate:e})")]
    QuadratureNonConvergence { estimate: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),
}
