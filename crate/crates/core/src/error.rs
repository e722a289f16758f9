use thiserror::Error;

use crate::composition::Algebra;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot combine elements of {left:?} and {right:?}")]
    MixedAlgebra { left: Algebra, right: Algebra },

    #[error("zero element has no inverse")]
    ZeroInverse,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix {index} is not skew-symmetric (deviation {deviation:.3e})")]
    NotSkew { index: usize, deviation: f64 },

    #[error("metric is not positive definite")]
    DegenerateMetric,

    #[error("skew form is degenerate")]
    DegenerateForm,

    #[error("odd dimension {0}: the Pfaffian polynomial is undefined")]
    OddDimension(usize),

    #[error("not a complex structure (|J^2 + I| = {0:.3e})")]
    NotComplexStructure(f64),

    #[error("complex structure is not compatible with the skew form: {0}")]
    IncompatibleStructure(String),

    #[error("bracket is not polycontact")]
    NotPolycontact,

    #[error("wedge form is indefinite on the bracket span (eigenvalues {0:?})")]
    IndefiniteWedge([f64; 3]),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("point is off the sphere (|a|^2 - 1 = {0:.3e})")]
    OffSphere(f64),

    #[error("Cayley map is singular here (|1 + q| = {0:.3e})")]
    CayleySingular(f64),

    #[error("point is off the hypersurface (rho = {0:.3e})")]
    OffHypersurface(f64),

    #[error("degenerate gradient of the defining function")]
    DegenerateGradient,

    #[error("frame construction lost rank ({0} of {1} directions)")]
    FrameBreakdown(usize, usize),

    #[error("numerical routine failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
