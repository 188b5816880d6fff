use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, block patterns or schema constraints do not conform.
    #[error("structural error: {0}")]
    Structural(String),

    /// A scalar argument is outside its domain (non-positive scale, etc.).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not Hermitian (residual {residual:.3e}, bound {bound:.3e})")]
    NotHermitian { residual: f64, bound: f64 },

    #[error("no spectral gap at 0: min |eigenvalue| {min_abs:.3e} <= {bound:.3e}")]
    NoSpectralGap { min_abs: f64, bound: f64 },

    #[error("duality degenerate: {0}")]
    DualityDegenerate(String),

    #[error("face {face:?} lies in {count} facets (expected 2)")]
    DanglingFace { face: Vec<usize>, count: usize },

    #[error("induced orientations do not cancel on faces {faces:?}")]
    OrientationConflict { faces: Vec<Vec<usize>> },

    #[error("duplicate facet {0:?}")]
    DuplicateFacet(Vec<usize>),

    #[error("triangulation is not orientable")]
    NonOrientable,

    #[error("cup-product pairing is degenerate on cohomology (rank {rank} of {dim})")]
    DegeneratePairing { rank: usize, dim: usize },

    #[error("homotopy equivalence invalid: {0}")]
    InvalidHomotopy(String),

    #[error("no fiberwise duality: {0}")]
    NoFiberwiseDuality(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
