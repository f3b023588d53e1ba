use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid substitution: {0}")]
    InvalidSubstitution(String),
    #[error("shift {shift} out of range 0..{len}")]
    ShiftOutOfRange { shift: u64, len: u64 },
    #[error("incompatible prefix-suffix stream at entry {index}: {detail}")]
    IncompatibleStream { index: usize, detail: String },
    #[error("no non-real eigenvalue of modulus > 1")]
    NoSuitableEigenvalue,
    #[error("root finding did not converge: {0}")]
    RootFinding(String),
    #[error("depth {depth} exceeds cap {cap}")]
    DepthCapExceeded { depth: usize, cap: usize },
    #[error("letter index {letter}: unresolved direction region near angle {angle}; the depth cap is too small for the tail bound to separate the labels")]
    UnresolvedRegion { letter: usize, angle: f64 },
    #[error("direction {angle} is not a tie for letter {letter}")]
    NotATie { letter: usize, angle: f64 },
    #[error("limit set did not stabilize within {0} iterations")]
    NoStabilization(usize),
    #[error("component {index} is not invariant: {detail}")]
    InvarianceViolation { index: usize, detail: String },
    #[error("point is not in the component")]
    NotInComponent,
    #[error("preimage is not unique ({0} candidates)")]
    NonUniquePreimage(usize),
    #[error("direction {0} is outside the projection of the component")]
    DirectionOutsideComponent(f64),
    #[error("window exceeded: index {index} outside [{lo}, {hi}]")]
    WindowExceeded { index: i64, lo: i64, hi: i64 },
    #[error("invalid interval exchange: {0}")]
    InvalidIem(String),
    #[error("orbit does not return within {0} iterations")]
    NonReturningOrbit(usize),
    #[error("series does not converge on the window")]
    SeriesDiverging,
    #[error("orbit points {0} and {1} collide")]
    OrbitCollision(i64, i64),
    #[error("reducible permutation")]
    ReduciblePermutation,
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
