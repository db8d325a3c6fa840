use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the zero wave vector has no orientation sign")]
    ZeroVector,
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("mode {0:?} lies outside the lattice cutoff")]
    OutOfCutoff(Vec<i64>),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("equation of state inadmissible at (rho, theta) = ({rho}, {theta}): {reason}")]
    Inadmissible { rho: f64, theta: f64, reason: String },
    #[error("exact arithmetic unavailable: {0}")]
    InexactLattice(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("snapshot format error: {0}")]
    Format(String),
    #[error("positivity lost at t = {t}: {detail}")]
    Positivity { t: f64, detail: String },
    #[error("non-finite value encountered at t = {0}")]
    NonFinite(f64),
    #[error("unreachable norm target: {0}")]
    UnreachableTarget(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
