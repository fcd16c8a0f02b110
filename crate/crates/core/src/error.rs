use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("Green's function evaluated at its pole (distance {distance:e})")]
    PoleCoincidence { distance: f64 },

    #[error("vector is not tangent at base point (<v, a> = {inner:e})")]
    NotTangent { inner: f64 },

    #[error("point lies on the cut locus (distance {distance})")]
    CutLocus { distance: f64 },

    #[error("point {0} is not tabulated in the manifold model")]
    NotTabulated(String),

    #[error("syntax error at byte {position}: found {found}, expected one of {}", expected.join(", "))]
    Syntax { position: usize, found: String, expected: Vec<String> },

    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("evaluation outside the domain: {0}")]
    EvaluationDomain(String),

    #[error("K is not positive: minimum {min} at {witness:?}")]
    NotPositive { min: f64, witness: [f64; 5] },

    #[error("critical point search incomplete: alternating index sum {euler_sum} != 2 over {found} points")]
    IncompleteSearch { euler_sum: i64, found: usize },

    #[error("degenerate critical point at {location:?}: Hessian eigenvalue {eigenvalue:e}")]
    DegenerateCriticalPoint { location: [f64; 5], eigenvalue: f64 },

    #[error("{count} points with positive beta exceed the enumeration cap {max}")]
    TooManyPeaks { count: usize, max: usize },

    #[error("no mu assertion for candidate {{{}}}", subset.join(","))]
    MissingMuAssertion { subset: Vec<String> },

    #[error("invalid mu assertion for {{{}}}: {reason}", subset.join(","))]
    InvalidMuAssertion { subset: Vec<String>, reason: String },

    #[error("unknown subset member `{0}`")]
    UnknownSubset(String),

    #[error("quadrature did not converge (estimate {estimate}, error {error:e})")]
    QuadratureNotConverged { estimate: f64, error: f64 },

    #[error("weights left the admissible band at t = {t}")]
    DivergedWeights { t: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
