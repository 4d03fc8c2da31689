use thiserror::Error;

/// Errors raised across mesh construction, discretisation and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cell {cell} is not star-shaped with respect to its cell point (face {face}: d = {distance:e})")]
    NonStarShaped {
        cell: usize,
        face: usize,
        distance: f64,
    },
    #[error("face {face} has zero measure")]
    DegenerateFace { face: usize },
    #[error("face {face} is not planar")]
    NonPlanarFace { face: usize },
    #[error("cell {cell} has non-positive measure")]
    DegenerateCell { cell: usize },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("unsupported dimension {0} (only d = 2 geometry is implemented)")]
    UnsupportedDimension(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{}: {source}", path.display())]
    InFile {
        path: std::path::PathBuf,
        source: Box<Error>,
    },
    #[error("barycentric weights missing for face {face}")]
    MissingWeights { face: usize },
    #[error("partition policy requires a region map")]
    MissingRegionMap,
    #[error("no valid barycentric combination for face {face}")]
    NoValidCombination { face: usize },
    #[error("weights of face {face} violate the affine conditions")]
    InconsistentWeights { face: usize },
    #[error("diffusion tensor of cell {cell} is not symmetric")]
    NonSymmetricTensor { cell: usize },
    #[error("diffusion tensor of cell {cell} is not positive definite")]
    NonPositiveTensor { cell: usize },
    #[error("row {row} has a zero diagonal after elimination")]
    SingularAfterElimination { row: usize },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("conjugate gradient breakdown at iteration {iteration}: matrix is not positive definite")]
    BreakdownNonSpd { iteration: usize },
    #[error("conjugate gradient stagnated at iteration {iteration} (relative residual {residual:e}); the tolerance is below rounding level")]
    Stagnated { iteration: usize, residual: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("boundary face {face} does not lie on a side of the unit square")]
    UnclassifiedBoundaryFace { face: usize },
    #[error("flux consistency functional requires an identity diffusion tensor")]
    RequiresIdentityTensor,
    #[error("convergence fit needs at least 3 levels, got {got}")]
    InsufficientLevels { got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input (exit code 2) rather than a
    /// numerical failure (exit code 1).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Parse { .. }
                | Error::Io(_)
                | Error::InvalidTopology(_)
                | Error::UnsupportedDimension(_)
                | Error::MissingRegionMap
                | Error::InvalidConfig(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

impl Error {
    /// Attaches the file being read.
    pub fn in_file(self, path: impl Into<std::path::PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// The error without file context.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
