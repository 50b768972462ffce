use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole ({x}, {y}) is not strictly inside the domain")]
    PoleOutsideDomain { x: f64, y: f64 },
    #[error("cut-off radius {0} is not in (0, 1)")]
    InvalidRadius(f64),
    #[error("invalid domain: {0}")]
    InvalidDomain(&'static str),
    #[error("invalid weight: {0}")]
    InvalidWeight(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("slit of length {d_a} cannot be resolved with h = {h} (need d_a >= 4h)")]
    SlitTooShort { d_a: f64, h: f64 },
    #[error("meshing failed: {0}")]
    MeshingFailure(&'static str),
    #[error("triangle {index} has area {area:e}")]
    SingularElement { index: usize, area: f64 },
    #[error("eigensolver did not converge (residual {residual:e})")]
    ConvergenceFailure { residual: f64 },
    #[error("factorization failed at pivot {pivot}")]
    FactorizationFailure { pivot: usize },
    #[error("geometric nodes of the plain and slit meshes differ")]
    MeshMismatch,
    #[error("cluster {n}..{n}+{m} is not separated from the rest of the spectrum")]
    ClusterAmbiguous { n: usize, m: usize },
    #[error("adaptive quadrature failed (error estimate {estimate:e})")]
    QuadratureFailure { estimate: f64 },
    #[error("argument {0} outside the domain of the function")]
    DomainError(f64),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}
