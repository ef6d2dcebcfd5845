use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot place {n_cars} cars on {n_cells} cells")]
    TooManyCars { n_cars: usize, n_cells: usize },

    #[error("lattice must have at least one cell")]
    EmptyLattice,

    #[error("unknown car identity {0}")]
    UnknownCar(usize),

    #[error("look-ahead distance {look_ahead} out of range [1, {n_cells}]")]
    LookAheadOutOfRange { look_ahead: usize, n_cells: usize },

    #[error("exponential kernel needs a positive finite lambda, got {0}")]
    InvalidLambda(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("slowdown argument must be non-negative, got {0}")]
    NegativeWeight(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("total rate is zero, no event can fire")]
    NoEvents,

    #[error("measurement window is empty")]
    EmptyWindow,

    #[error("no closed form for {0}")]
    UnsupportedLimit(String),

    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
