use thiserror::Error;

use crate::discretization::NodeRef;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // network validation
    #[error("network has no edges")]
    EmptyNetwork,
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("unknown identifier `{0}`")]
    UnknownId(String),
    #[error("edge `{0}` is a loop (tail equals head)")]
    LoopEdge(String),
    #[error("edges `{0}` and `{1}` join the same pair of vertices")]
    ParallelEdges(String, String),
    #[error("network is disconnected: `{0}` is not reachable from `{1}`")]
    Disconnected(String, String),
    #[error("edge `{0}` has nonpositive or non-finite length {1}")]
    NonpositiveLength(String, f64),
    #[error("beta for vertex `{vertex}` on edge `{edge}` must be positive and finite, got {value}")]
    MissingOrNonpositiveBeta { vertex: String, edge: String, value: f64 },
    #[error("beta given for boundary vertex `{0}`")]
    BetaOnBoundaryVertex(String),
    #[error("beta given for vertex `{vertex}` on non-incident edge `{edge}`")]
    BetaOnNonIncidentEdge { vertex: String, edge: String },
    #[error("boundary data given for transition vertex `{0}`")]
    BoundaryDataOnTransitionVertex(String),
    #[error("non-finite boundary value at vertex `{0}`")]
    NonFiniteBoundaryValue(String),
    #[error("network has no boundary vertex")]
    NoBoundaryVertex,
    #[error("transition vertex `{0}` has a single incident edge; declare it as boundary")]
    DanglingTransitionVertex(String),
    #[error("`{0}` is not a transition vertex")]
    NotTransitionVertex(String),
    #[error("could not construct a Kirchhoff-positive field after {0} attempts")]
    ConstructionFailed(usize),

    // discretization
    #[error("grid resolution is invalid: {0}")]
    ResolutionTooCoarse(String),
    #[error("coefficient sign violation on edge `{edge}` at y={y}: {what}")]
    CoefficientSignViolation { edge: String, y: f64, what: &'static str },
    #[error("parameter y={y} outside edge `{edge}` of length {length}")]
    OutOfRange { edge: String, y: f64, length: f64 },
    #[error("grid function does not match the grid ({expected} unknowns expected, got {got})")]
    GridMismatch { expected: usize, got: usize },

    // linear solves
    #[error("singular system: pivot {pivot:e} below threshold {threshold:e}")]
    SingularSystem { pivot: f64, threshold: f64 },
    #[error("discrete maximum principle certificate failed at {node:?} (value {value}, boundary max {boundary_max})")]
    CertificateFailed {
        node: NodeRef,
        value: f64,
        boundary_max: f64,
    },

    // viscous problems
    #[error("positivity lost: min of w+1 is {min_value:e} on edge `{edge}`; refine the grid or raise eps")]
    PositivityLost { min_value: f64, edge: String },
    #[error("eps must be positive and finite, got {0}")]
    InvalidEps(f64),
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Option<Box<crate::discretization::GridFunction>>,
    },
    #[error("Newton Jacobian is singular: {0}")]
    JacobianSingular(Box<Error>),

    // vanishing viscosity
    #[error("invalid eps schedule: {0}")]
    InvalidSchedule(String),
    #[error("rate fit needs at least 3 positive pairs, got {0}")]
    InsufficientData(usize),

    // oracle
    #[error("density on edge `{edge}` is {value} at y={y}, below the floor {floor}")]
    NonpositiveDensity {
        edge: String,
        y: f64,
        value: f64,
        floor: f64,
    },
    #[error("network too large for brute force enumeration ({0} edges, limit 12)")]
    TooLarge(usize),

    // stochastic validator
    #[error("time step too large: overshoot {overshoot} exceeds edge `{edge}` of length {length}")]
    StepTooLarge { overshoot: f64, edge: String, length: f64 },
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidMcConfig(String),

    // input
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            SingularSystem { .. }
            | PositivityLost { .. }
            | NoConvergence { .. }
            | JacobianSingular(_)
            | StepTooLarge { .. } => 3,
            CertificateFailed { .. } | ConstructionFailed(_) | GridMismatch { .. } => 4,
            _ => 2,
        }
    }
}
