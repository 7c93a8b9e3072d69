use thiserror::Error;

/// Errors raised anywhere in the discretization / decomposition / solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("resolution {fine} is not a multiple of {coarse}")]
    NotDivisible { fine: usize, coarse: usize },

    #[error("degenerate tetrahedron {tet} (signed volume {volume:e})")]
    DegenerateElement { tet: usize, volume: f64 },

    #[error("fine tetrahedron {fine} is not contained in coarse tetrahedron {coarse}")]
    NestingFailure { fine: usize, coarse: usize },

    #[error("coarse basis function {coarse_dof} has inconsistent tangential trace on fine edge {edge} (jump {jump:e})")]
    TraceDiscontinuity {
        coarse_dof: usize,
        edge: usize,
        jump: f64,
    },

    #[error("degree of freedom {dof} is not covered by any subdomain")]
    UncoveredDof { dof: usize },

    #[error("singular matrix in {context}: pivot {pivot} has magnitude {magnitude:e}")]
    Singular {
        context: String,
        pivot: usize,
        magnitude: f64,
    },

    #[error("{what} of size {size} exceeds the dense cap of {cap}")]
    SizeCap {
        what: String,
        size: usize,
        cap: usize,
    },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("field of values touches the origin; the Elman-type bound does not apply")]
    FovContainsOrigin,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
