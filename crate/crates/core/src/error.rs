use thiserror::Error;

use crate::linalg::SpectrumReport;
use crate::Point3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigenvalue iteration did not converge within {iterations} sweeps")]
    NoConvergence { iterations: usize },

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("matrix is not diagonalizable")]
    NonDiagonalizable(Box<SpectrumReport>),

    #[error("eigenvalues nearly coalesce (min gap {min_gap:.3e} < floor {floor:.3e}); too close to an exceptional point")]
    NearDefective { min_gap: f64, floor: f64 },

    #[error("model `{0}` has no closed-form reference")]
    NoReference(String),

    #[error("parameter point lies on the exceptional set")]
    OnExceptionalPoint,

    #[error("parameter point outside the closed form's region of validity: {0}")]
    OutOfValidity(String),

    #[error("complex spectrum at sample {index} (max |Im E| = {max_imag:.3e})")]
    ComplexSpectrum { index: usize, max_imag: f64 },

    #[error("step {index} too coarse for band tracking (overlap deviation {deviation:.3})")]
    StepTooCoarse { index: usize, deviation: f64 },

    #[error("bands {a} and {b} are degenerate (gap {gap:.3e})")]
    Degenerate { a: usize, b: usize, gap: f64 },

    #[error("leakage {leakage:.3e} exceeds threshold {threshold:.3e}")]
    LeakageTooLarge { leakage: f64, threshold: f64 },

    #[error("path or loop is not closed")]
    NotClosed,

    #[error("edge {index} could not be refined below the overlap bound")]
    EdgeTooLong { index: usize },

    #[error("band {band} is exchanged with band {with} around the loop")]
    BandExchange { band: usize, with: usize },

    #[error("finite-difference step {h:.3e} is too small (roundoff estimate {roundoff:.3e})")]
    StepDegenerate { h: f64, roundoff: f64 },

    #[error("surface vertex {index} is within the exceptional-point margin")]
    SurfaceTouchesEP { index: usize },

    #[error("need at least {needed} sample points, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("gauge factor {index} is zero")]
    ZeroFactor { index: usize },

    #[error("{source} at R = ({:.6}, {:.6}, {:.6})", r[0], r[1], r[2])]
    AtPoint { r: Point3, source: Box<Error> },
}

impl Error {
    /// Attaches the parameter point at which a failure happened.
    pub fn at(self, r: Point3) -> Error {
        match self {
            Error::AtPoint { .. } => self,
            other => Error::AtPoint { r, source: Box::new(other) },
        }
    }

    /// Parameter point attached to the error, if any.
    pub fn point(&self) -> Option<Point3> {
        match self {
            Error::AtPoint { r, .. } => Some(*r),
            _ => None,
        }
    }

    /// The error with any point context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InvalidInput(_) => "InvalidInput",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::Singular { .. } => "Singular",
            Error::NonDiagonalizable(_) => "NonDiagonalizable",
            Error::NearDefective { .. } => "NearDefective",
            Error::NoReference(_) => "NoReference",
            Error::OnExceptionalPoint => "OnEP",
            Error::OutOfValidity(_) => "OutOfValidity",
            Error::ComplexSpectrum { .. } => "ComplexSpectrum",
            Error::StepTooCoarse { .. } => "StepTooCoarse",
            Error::Degenerate { .. } => "Degenerate",
            Error::LeakageTooLarge { .. } => "LeakageTooLarge",
            Error::NotClosed => "NotClosed",
            Error::EdgeTooLong { .. } => "EdgeTooLong",
            Error::BandExchange { .. } => "BandExchange",
            Error::StepDegenerate { .. } => "StepDegenerate",
            Error::SurfaceTouchesEP { .. } => "SurfaceTouchesEP",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::ZeroFactor { .. } => "ZeroFactor",
            Error::AtPoint { .. } => unreachable!(),
        }
    }
}
