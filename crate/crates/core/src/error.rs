use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Search failures (`S0NotFound`, `RealizationNotFound`, ...) only mean the
/// bounded search gave up; they never disprove the existence of the object.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integration failed at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("consecutive directions {gap} turns apart at sample {index} (must be < 1/4)")]
    GapTooLarge { index: usize, gap: f64 },

    #[error("lift refinement exhausted near t = {time}")]
    RefinementExhausted { time: f64 },

    #[error("orbits collide at t = {time} (separation {separation:e})")]
    Collision { time: f64, separation: f64 },

    #[error("|linking| = {epsilon:e} is below the threshold {threshold:e}")]
    ZeroLinking { epsilon: f64, threshold: f64 },

    #[error("no s0 satisfying the witness bound after {grid_points} grid points")]
    S0NotFound { grid_points: usize },

    #[error("every candidate pair has |linking| below {threshold:e}")]
    AllPairsZeroLinking { threshold: f64 },

    #[error("no periodic point realizing ({p}, {p_prime})/{q} within the search budget")]
    RealizationNotFound { p: i64, p_prime: i64, q: u32 },

    #[error("inverting the conjugacy failed at ({x}, {y})")]
    InversionFailure { x: f64, y: f64 },

    #[error("point is not fixed by the isotopy (max displacement {displacement:e})")]
    NotFixed { displacement: f64 },

    #[error("no candidate fixed point with |action| >= {tol:e}")]
    NoCandidateAboveTol { tol: f64 },

    #[error("matrix is not a hyperbolic unimodular automorphism")]
    NotHyperbolic,

    #[error("unsupported automorphism: {0}")]
    UnsupportedMatrix(String),

    #[error("verification failed: {0}")]
    VerificationFailure(String),

    #[error("no connecting chain of length <= {max_len} (explored {explored} states)")]
    ChainNotFound { max_len: usize, explored: usize },

    #[error("(0,0) is not interior to the convex hull of the chain translations")]
    HullConditionFailed,

    #[error("no positive integer solution with coefficients <= {bound}")]
    NoIntegerSolution { bound: u64 },

    #[error("itinerary mismatch at step {step}")]
    ItineraryMismatch { step: usize },

    #[error("point is not strictly inside the triangle")]
    PointNotInterior,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// True for bounded-search failures (as opposed to numeric breakdowns or
    /// bad input).
    pub fn is_search_failure(&self) -> bool {
        matches!(
            self,
            Error::S0NotFound { .. }
                | Error::RealizationNotFound { .. }
                | Error::ChainNotFound { .. }
                | Error::NoIntegerSolution { .. }
                | Error::NoCandidateAboveTol { .. }
                | Error::AllPairsZeroLinking { .. }
                | Error::ZeroLinking { .. }
        )
    }

    pub fn is_usage_error(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::Parse(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
