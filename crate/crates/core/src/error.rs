use thiserror::Error;

/// Errors raised by the geometric and transport operations.
///
/// Each variant maps to a stable machine-readable kind via [`Error::kind`],
/// which the command-line front end reports on standard error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("curve is constant")]
    DegenerateCurve,
    #[error("parameter {t} sits on a vertex where the incoming and outgoing directions differ")]
    VertexParameter { t: f64 },
    #[error("parameter {t} outside the open interval (0, {len})")]
    ParameterOutOfRange { t: f64, len: f64 },
    #[error("bad interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid mass {0}: atoms must carry positive finite mass")]
    InvalidMass(f64),
    #[error("point {0:?} lies outside the domain ball of radius {1}")]
    OutsideDomain(Vec<f64>, f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("overlay snapping produced a zero-length edge")]
    OverlayDegeneracy,
    #[error("alpha = {0} is outside (0, 1]")]
    BadAlpha(f64),
    #[error("measure is unbalanced: total weight {0}")]
    UnbalancedMeasure(f64),
    #[error("level {level} is not generic: {reason}")]
    NonGenericLevel { level: f64, reason: String },
    #[error("invalid slice function: {0}")]
    InvalidSliceFunction(String),
    #[error("no quasi-cycle: min of the two directional masses is zero")]
    NoQuasiCycle,
    #[error("eps0 = {eps0} must lie in (0, |y - x| / 8 = {limit}]")]
    EpsTooLarge { eps0: f64, limit: f64 },
    #[error("atom {0} is not a simple nonconstant curve")]
    NonSimpleAtom(usize),
    #[error("residual plan has negative mass {mass} on atom {atom}")]
    NegativeResidual { atom: usize, mass: f64 },
    #[error("internal estimate violated: {0}")]
    EstimateViolated(String),
    #[error("too many atoms: {sources} sources and {sinks} sinks (cap is {cap} per side)")]
    TooManyAtoms {
        sources: usize,
        sinks: usize,
        cap: usize,
    },
    #[error("marginal masses differ: {minus} vs {plus}")]
    MassMismatch { minus: f64, plus: f64 },
    #[error("flow is not decomposable: {0}")]
    Decomposition(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateCurve => "DegenerateCurve",
            Error::VertexParameter { .. } => "VertexParameter",
            Error::ParameterOutOfRange { .. } => "ParameterOutOfRange",
            Error::BadInterval { .. } => "BadInterval",
            Error::InvalidCone(_) => "InvalidCone",
            Error::InvalidCurve(_) => "InvalidCurve",
            Error::InvalidMass(_) => "InvalidMass",
            Error::OutsideDomain(..) => "OutsideDomain",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OverlayDegeneracy => "OverlayDegeneracy",
            Error::BadAlpha(_) => "BadAlpha",
            Error::UnbalancedMeasure(_) => "UnbalancedMeasure",
            Error::NonGenericLevel { .. } => "NonGenericLevel",
            Error::InvalidSliceFunction(_) => "InvalidSliceFunction",
            Error::NoQuasiCycle => "NoQuasiCycle",
            Error::EpsTooLarge { .. } => "EpsTooLarge",
            Error::NonSimpleAtom(_) => "NonSimpleAtom",
            Error::NegativeResidual { .. } => "NegativeResidual",
            Error::EstimateViolated(_) => "EstimateViolated",
            Error::TooManyAtoms { .. } => "TooManyAtoms",
            Error::MassMismatch { .. } => "MassMismatch",
            Error::Decomposition(_) => "Decomposition",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadAlpha(alpha))
    }
}
