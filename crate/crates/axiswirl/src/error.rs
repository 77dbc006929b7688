//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by every module of the laboratory.
///
/// Numerical routines return structured variants rather than panicking so the
/// CLI can map them onto its exit-code contract (validation failures vs.
/// numerical failures).
#[derive(Debug, Error)]
pub enum Error {
    /// A grid constructor or field operation received inconsistent sizes.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Two fields (or a field and a grid) disagree on shape or spacing.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A parity-sensitive operation received a field of the wrong symmetry.
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),

    /// A stencil or trace would read outside the stored grid.
    #[error("grid too coarse near wall: {0}")]
    GridTooCoarse(String),

    /// A kernel or functional was evaluated at an excluded point.
    #[error("singular evaluation: {0}")]
    Singular(String),

    /// Adaptive quadrature could not meet its requested tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// The elliptic solve finished but violated its residual contract.
    #[error("elliptic solve failed: residual {residual:.3e} exceeds {limit:.3e}")]
    SolveFailure { residual: f64, limit: f64 },

    /// A packet is degenerate (empty support or vanishing normalizer).
    #[error("degenerate packet: {0}")]
    DegeneratePacket(String),

    /// A packet is too small for the grid to resolve.
    #[error("packet unresolved by grid: {0}")]
    UnresolvedPacket(String),

    /// Non-finite values appeared in a state or result.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Time-series input violated its monotonicity or length contract.
    #[error("invalid trace series: {0}")]
    InvalidSeries(String),

    /// Adaptive ODE integration failed (step underflow or conservation
    /// drift beyond contract).
    #[error("ode integration failure: {0}")]
    OdeFailure(String),

    /// An initial-condition parameter violated its admissibility constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Configuration parsing or validation failed; the message cites the
    /// violated constraint.
    #[error("config error: {0}")]
    Config(String),

    /// Snapshot serialization or deserialization failed.
    #[error("snapshot format error: {0}")]
    Snapshot(String),

    /// Underlying IO failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
