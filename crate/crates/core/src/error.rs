use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("edge `{edge}` references undeclared vertex `{vertex}`")]
    DanglingEndpoint { edge: String, vertex: String },
    #[error("grade {0} is not declared in the cochain system")]
    GradeMissing(usize),
    #[error("degree {0} out of range")]
    DegreeOutOfRange(usize),
    #[error("bad resolution: {0}")]
    BadResolution(String),
    #[error("empty spectrum list")]
    EmptySpectrum,
    #[error("insufficient modes: requested {requested}, available {available}")]
    InsufficientModes { requested: usize, available: usize },
    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),
    #[error("bad topology: {0}")]
    BadTopology(String),
    #[error("gluing mismatch: {0}")]
    GluingMismatch(String),
    #[error("open boundary left after gluing: {0}")]
    OpenBoundaryLeft(String),
    #[error("restriction length {s} outside [0, {r}]")]
    SOutOfRange { s: f64, r: f64 },
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("ambiguous kernel: {0}")]
    AmbiguousKernel(String),
    #[error("spectrum not resolved up to {0}")]
    UnresolvedSpectrum(f64),
    #[error("subspaces live in different ambient spaces ({0} vs {1})")]
    AmbientMismatch(usize, usize),
    #[error("edge `{0}` has no cylinder in this complex")]
    EdgeNotCylindrical(String),
    #[error("|mu| = {mu} is not below the spectral gap {gap}")]
    MuTooLarge { mu: f64, gap: f64 },
    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),
    #[error("fit residual {residual} exceeds {tol}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("cylinder too short: length {length}, need {needed}")]
    CylinderTooShort { length: f64, needed: f64 },
    #[error("rank deficient input: {0}")]
    RankDeficientInput(String),
    #[error("stretch r = {0} is out of range")]
    ROutOfRange(f64),
    #[error("star truncation {t} shorter than r = {r}")]
    TruncationTooShort { t: f64, r: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("io error: {0}")]
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
        Error::Parse(e.to_string())
    }
}
