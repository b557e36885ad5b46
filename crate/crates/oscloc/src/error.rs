//! Error type shared by all analysis modules.

use thiserror::Error;

/// Errors produced by the analysis pipeline and its stages.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs violate a documented precondition (missing channel, mismatched
    /// sample rates, bad parameter range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A series is too short or otherwise degenerate for the requested
    /// operation.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Target frequency outside the open interval (0, Nyquist).
    #[error("frequency {frequency_hz} Hz outside (0, {nyquist_hz}) Hz")]
    InvalidFrequency { frequency_hz: f64, nyquist_hz: f64 },

    /// Not enough samples for even one full spectral segment.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The band-restricted spectrum carries no usable peak.
    #[error("no spectral peak in band [{f_lo} Hz, {f_hi} Hz]")]
    NoPeak { f_lo: f64, f_hi: f64 },

    /// Ring-down data is rank deficient; no oscillatory mode could be
    /// extracted.
    #[error("no oscillatory mode found: {0}")]
    NoMode(String),

    /// No identified mode lies within tolerance of the target frequency.
    /// Carries the nearest candidate for diagnostics.
    #[error(
        "no mode within {tol_hz} Hz of {target_hz} Hz (nearest candidate at {nearest_hz} Hz, \
         {distance_hz} Hz away)"
    )]
    NoMatchingMode {
        target_hz: f64,
        tol_hz: f64,
        nearest_hz: f64,
        distance_hz: f64,
    },

    /// A grid model violates one of its structural invariants.
    #[error("model invariant violated: {0}")]
    ModelInvariant(String),

    /// The scenario generator exhausted its retry budget.
    #[error("scenario generation failed: {0}")]
    ScenarioGeneration(String),

    /// All triangulation weights are zero.
    #[error("triangulation weights are all zero")]
    DegenerateWeights,

    /// A numerical routine failed to converge; indicates an internal problem
    /// rather than bad input.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Wraps an error with the pipeline stage that raised it.
    #[error("pipeline stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tags an error with the pipeline stage it came from.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True when the error (or the error it wraps) reflects bad input rather
    /// than an internal numerical failure. Drives CLI exit codes.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Numerical(_) => false,
            Error::Stage { source, .. } => source.is_input_error(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
