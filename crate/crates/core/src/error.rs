use thiserror::Error;

/// Errors raised by the grid, solver and study routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid resolution n = {0} is below the minimum of 8")]
    ResolutionTooSmall(usize),
    #[error("grid resolution n = {0} is not divisible by 8")]
    ResolutionNotDivisible(usize),
    #[error("window rectangle touches the domain boundary or leaves the domain")]
    RectTouchesBoundary,
    #[error("window rectangle is empty or not grid-aligned")]
    RectEmpty,
    #[error("boundary run [{start}, {end}] contains no nodes")]
    EmptyRun { start: f64, end: f64 },
    #[error("unknown boundary segment `{0}`")]
    UnknownSegment(String),
    #[error("fractional order {0} not supported (use 0, 0.5, 1 or 1.5)")]
    OrderNotSupported(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("CG did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("CG detected non-positive curvature at iteration {0}")]
    IndefiniteDetected(usize),
    #[error("matrix is not positive definite (pivot {pivot}, value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix dimension {dim} exceeds the dense factorization cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("least-squares system is rank deficient at column {0}")]
    SingularSystem(usize),
    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),
    #[error("incompatible data needs two different cases")]
    CasesIdentical,
    #[error("epsilon must be positive, got {0}")]
    EpsilonNonpositive(f64),
    #[error("problem has no boundary data on the observation segment")]
    MissingBoundaryData,
    #[error("observation window is empty")]
    EmptyWindow,
    #[error("operation requires a square annulus grid")]
    WrongDomainKind,
    #[error("reduced Kohn-Vogelius system is not positive definite")]
    ReducedSystemNotPd,
    #[error("direction vector must be nonzero")]
    ZeroDirection,
    #[error("invalid epsilon list: {0}")]
    EpsListInvalid(String),
    #[error("need at least {needed} pre-floor rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("Robin lower bound m = {0:e} is not positive on the compact set")]
    MDegenerate(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("nonzero divergence data is not supported by this method")]
    NonzeroDivergenceData,
}

pub type Result<T> = std::result::Result<T, Error>;
