use thiserror::Error;

/// Errors shared across the library.
///
/// `TooLarge`, `BoundaryContamination` and `RadiusTooLarge` are resource
/// guards: they mean the request was well-formed but would exceed a dense
/// budget or invalidate a finite-volume approximation. Everything else is a
/// usage error.
#[derive(Debug, Clone, Error)]
pub enum BlochError {
    #[error("dimension mismatch: expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("axis {axis} out of range (valid axes are 1..={d})")]
    InvalidAxis { axis: usize, d: usize },

    #[error("sites {x:?} and {y:?} are not nearest neighbors")]
    NotNeighbors { x: Vec<i64>, y: Vec<i64> },

    #[error("dense request of size {size} exceeds the guard limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("torus side {side} on axis {axis} is not a positive multiple of the period {q}")]
    IncommensurateTorus { axis: usize, side: i64, q: i64 },

    #[error("matrix is not Hermitian: max |A - A*| = {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("state geometry is incompatible: {0}")]
    GeometryMismatch(String),

    #[error(
        "direct position moments are undefined on a torus; use the unwrapped trace \
         (time integral of the velocity expectation) instead"
    )]
    TorusWithoutUnwrapConvention,

    #[error(
        "boundary band carries mass fraction {mass:.3e} > threshold {threshold:.3e}; \
         the finite box no longer represents the infinite lattice \
         (suggested radius: {suggested:?})"
    )]
    BoundaryContamination {
        mass: f64,
        threshold: f64,
        suggested: Vec<i64>,
    },

    #[error("support radius {radius} does not fit the geometry on axis {axis} (limit {limit})")]
    RadiusTooLarge { radius: i64, limit: i64, axis: usize },

    #[error("Heisenberg position apply is undefined at t = 0")]
    ZeroTime,

    #[error("{0}")]
    Invalid(String),
}

impl BlochError {
    /// True for errors that signal a resource guard rather than misuse.
    pub fn is_resource_guard(&self) -> bool {
        matches!(
            self,
            BlochError::TooLarge { .. }
                | BlochError::BoundaryContamination { .. }
                | BlochError::RadiusTooLarge { .. }
        )
    }
}

pub type Result<T, E = BlochError> = std::result::Result<T, E>;
