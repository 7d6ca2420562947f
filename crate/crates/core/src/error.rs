use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid radius {0}: discrete balls need a radius of at least one cell")]
    InvalidRadius(f64),

    #[error("invalid weight profile: {0}")]
    InvalidProfile(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values but the grid has {expected} cells")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("invalid energy: {0}")]
    InvalidEnergy(String),

    #[error("exhaustive search refused: {0} free cells (limit 20)")]
    TooLarge(usize),

    #[error("point is not on the boundary (off by {0})")]
    NotOnBoundary(f64),

    #[error("gradient vanishes; the Hamiltonian is singular at p = 0")]
    SingularGradient,

    #[error("time step {dt} exceeds the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("pgm: {0}")]
    Pgm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
