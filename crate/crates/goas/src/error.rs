//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the reflector pipeline and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    /// An input that must be nonzero/nondegenerate was not (e.g. the zero
    /// vector passed to a normalization).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A chart point with |t| >= 1 has no preimage on the upper hemisphere.
    #[error("point lies outside the coordinate chart: |t| = {norm}")]
    OutOfChart { norm: f64 },

    /// A parameter violated its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The target density returned a negative or non-finite value.
    #[error("invalid density value {value} at point index {index}")]
    InvalidDensity { index: usize, value: f64 },

    /// Every discretization weight is zero; no energy can be assigned.
    #[error("degenerate target: all weights are zero")]
    DegenerateTarget,

    /// A pilot sample set spans zero width on some axis.
    #[error("degenerate bounding box: zero width on axis {axis}")]
    DegenerateBox { axis: usize },

    /// Some target direction lies inside the closure of the source aperture,
    /// so no admissible reflector exists (gamma >= 1).
    #[error("source aperture too wide for target: gamma = {gamma}")]
    ApertureTooWide { gamma: f64 },

    /// The builder exhausted its iteration budget. Carries the residual
    /// history so callers can inspect the convergence trajectory.
    #[error("reflector build did not converge after {iterations} iterations (last residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    /// A reflected ray does not travel toward the target plane.
    #[error("reflected ray escapes upward (y_last = {y_last})")]
    EscapingRay { y_last: f64 },

    /// A direction too close to the equator for the north-pole chart.
    #[error("chart degeneracy: direction has last component {last}")]
    ChartDegeneracy { last: f64 },

    /// The smoothed surface produced a vanishing normal denominator.
    #[error("singular surface normal at the queried direction")]
    SingularSurface,

    /// Two gridded densities do not share a grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// All ray intensities vanished; the residual is undefined.
    #[error("degenerate source: total intensity Q = 0")]
    DegenerateSource,

    /// A serialized reflector file failed validation.
    #[error("reflector file error in field `{field}`: {message}")]
    ReflectorFile { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
