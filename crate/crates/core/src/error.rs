use alloc::string::String;

/// Errors raised by the geometric core.
///
/// Every variant maps onto a stable, machine-readable [`Error::kind`] and the
/// [`Error::module`] it originates from, so front-ends can report failures
/// without string matching on the display text.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid model string `{0}`")]
    InvalidModelString(String),
    #[error("{family} takes {expected} distortion coefficients, got {got}")]
    DistCountMismatch {
        family: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("ray outside the projectable domain of the model")]
    RayOutsideDomain,
    #[error("pixel cannot be unprojected (outside the injective region or no convergence)")]
    NonInvertiblePixel,
    #[error("ray is antipodal to the optical axis")]
    AntipodalRay,
    #[error("tangent vector norm must be below pi")]
    ThetaOutOfDomain,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("non-positive focal length after the linear solve")]
    InvalidFocal,
    #[error("no feasible assignment of the active bounds")]
    BoundInfeasible,
    #[error("singular normal matrix in Gauss-Newton refinement")]
    SingularNormalMatrix,
    #[error("no consensus: best inlier ratio {0:.3} below 0.1")]
    NoConsensus(f64),
    #[error("image border could not be unprojected")]
    BorderUnprojectionFailed,
    #[error("empty input")]
    EmptyInput,
    #[error("field of view outside the range representable by the model")]
    FovOutOfRange,
    #[error("Newton iteration diverged")]
    NewtonDivergence,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

impl Error {
    /// Stable error name, used in machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModelString(_) => "InvalidModelString",
            Error::DistCountMismatch { .. } => "DistCountMismatch",
            Error::RayOutsideDomain => "RayOutsideDomain",
            Error::NonInvertiblePixel => "NonInvertiblePixel",
            Error::AntipodalRay => "AntipodalRay",
            Error::ThetaOutOfDomain => "ThetaOutOfDomain",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::DegenerateGeometry(_) => "DegenerateGeometry",
            Error::InvalidFocal => "InvalidFocal",
            Error::BoundInfeasible => "BoundInfeasible",
            Error::SingularNormalMatrix => "SingularNormalMatrix",
            Error::NoConsensus(_) => "NoConsensus",
            Error::BorderUnprojectionFailed => "BorderUnprojectionFailed",
            Error::EmptyInput => "EmptyInput",
            Error::FovOutOfRange => "FovOutOfRange",
            Error::NewtonDivergence => "NewtonDivergence",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// Name of the module that raises this error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidModelString(_)
            | Error::DistCountMismatch { .. }
            | Error::RayOutsideDomain
            | Error::NonInvertiblePixel => "camera_models",
            Error::AntipodalRay | Error::ThetaOutOfDomain | Error::DimensionMismatch(_) => {
                "fov_field"
            }
            Error::DegenerateGeometry(_)
            | Error::InvalidFocal
            | Error::BoundInfeasible
            | Error::SingularNormalMatrix
            | Error::NoConsensus(_) => "calibrator",
            Error::BorderUnprojectionFailed | Error::EmptyInput => "metrics",
            Error::FovOutOfRange | Error::NewtonDivergence => "synth",
            Error::InvalidArgument(_) => "core",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
