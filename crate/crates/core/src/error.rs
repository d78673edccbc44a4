use thiserror::Error;

/// Every failure the library can report. `code()` gives a stable
/// machine-readable tag used by the command-line front end.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(
        "value looks rational at this precision (partial quotient {quotient} at depth {depth})"
    )]
    RationalDetected { depth: usize, quotient: String },
    #[error("estimate did not converge: {0}")]
    NotConverged(String),
    #[error("target is not bracketed by the parameter range: {0}")]
    NotBracketed(String),
    #[error("critical windows {0} and {1} overlap")]
    WindowsOverlap(usize, usize),
    #[error("join between windows {window} and the next dips to derivative {min_derivative:e}")]
    NonMonotoneJoin { window: usize, min_derivative: f64 },
    #[error("point is a critical point")]
    AtCriticalPoint,
    #[error("precision exhausted after {iterate} iterates ({bits_left:.1} bits left)")]
    PrecisionExhausted { iterate: usize, bits_left: f64 },
    #[error("partition covers {total} of the circle (deviation {deviation:e})")]
    CoverageFailure { total: f64, deviation: f64 },
    #[error("level {0} too low: an atom holds two critical points")]
    LevelTooLow(usize),
    #[error("degenerate nested pair: {0}")]
    DegeneratePair(String),
    #[error("iterate {0} is not injective on the outer interval")]
    NonInjective(usize),
    #[error("a critical point lies inside the image of step {0}")]
    CriticalInside(usize),
    #[error("orbit hits a critical point at step {0}")]
    OrbitHitsCritical(usize),
    #[error("translation structure broken at atom {0}")]
    StructureBroken(usize),
    #[error("chain of length {0} is too short")]
    TooShort(usize),
    #[error("grid invalid at level {level}: {detail}")]
    GridInvalid { level: usize, detail: String },
    #[error("incompatible topology: {0}")]
    IncompatibleTopology(String),
    #[error("conjugacy order violated at breakpoint {0}")]
    OrderViolation(usize),
    #[error("scale {scale:e} is below the table resolution {resolution:e}")]
    ScaleBelowResolution { scale: f64, resolution: f64 },
    #[error("grids are not isomorphic at level {level}, atom {atom}")]
    NotIsomorphic { level: usize, atom: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::RationalDetected { .. } => "RationalDetected",
            Error::NotConverged(_) => "NotConverged",
            Error::NotBracketed(_) => "NotBracketed",
            Error::WindowsOverlap(..) => "WindowsOverlap",
            Error::NonMonotoneJoin { .. } => "NonMonotoneJoin",
            Error::AtCriticalPoint => "AtCriticalPoint",
            Error::PrecisionExhausted { .. } => "PrecisionExhausted",
            Error::CoverageFailure { .. } => "CoverageFailure",
            Error::LevelTooLow(_) => "LevelTooLow",
            Error::DegeneratePair(_) => "DegeneratePair",
            Error::NonInjective(_) => "NonInjective",
            Error::CriticalInside(_) => "CriticalInside",
            Error::OrbitHitsCritical(_) => "OrbitHitsCritical",
            Error::StructureBroken(_) => "StructureBroken",
            Error::TooShort(_) => "TooShort",
            Error::GridInvalid { .. } => "GridInvalid",
            Error::IncompatibleTopology(_) => "IncompatibleTopology",
            Error::OrderViolation(_) => "OrderViolation",
            Error::ScaleBelowResolution { .. } => "ScaleBelowResolution",
            Error::NotIsomorphic { .. } => "NotIsomorphic",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
