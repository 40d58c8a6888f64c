use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular to tolerance (pivot {pivot:.3e}, threshold {threshold:.3e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("matrix is not symmetric (defect {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not symplectic (defect {0:.3e})")]
    NotSymplectic(f64),
    #[error("matrix is not in GSp: {0}")]
    NotInGsp(String),
    #[error("matrix is not in GSp*: upper-left block is singular")]
    NotInGspStar,
    #[error("invalid parabolic element: {0}")]
    InvalidParabolic(String),
    #[error("point is not in the Siegel upper half-space: {0}")]
    NotInSiegel(String),
    #[error("expected a real matrix (imaginary defect {0:.3e})")]
    NotReal(f64),
    #[error("point leaves the symmetric chart: C Z + D is singular")]
    OutOfChart,
    #[error("tau is outside U_delta: j(delta, tau) is singular")]
    OutsideDomain,
    #[error("frame is not symplectic-Hodge (Gram defect {0:.3e})")]
    InvalidFrame(f64),
    #[error("unsupported Eisenstein weight {0} (expected 2, 4 or 6)")]
    UnsupportedWeight(u32),
    #[error("tail bound {bound:.3e} exceeds requested accuracy {accuracy:.3e}")]
    TailBound { bound: f64, accuracy: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
