use crate::graph::VertexId;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure mode of the library.
///
/// Variants are grouped loosely by the module that raises them. Input
/// errors (malformed files, invariant violations in user data) are
/// distinguished from computational failures by [`Error::is_input_error`],
/// which the command-line front end uses to pick its exit code.
#[derive(Debug, Error)]
pub enum Error {
    // graph construction
    #[error("LoopEdge: vertex {0} is joined to itself")]
    LoopEdge(VertexId),
    #[error("DuplicateEdge: edge {{{0}, {1}}} appears more than once")]
    DuplicateEdge(VertexId, VertexId),
    #[error("NonpositiveWeight: edge {{{x}, {y}}} has weight {weight}")]
    NonpositiveWeight { x: VertexId, y: VertexId, weight: f64 },
    #[error("UnknownVertex: {0}")]
    UnknownVertex(VertexId),
    #[error("NotMaterialized: neighbors of {0} have not been generated yet")]
    NotMaterialized(VertexId),
    #[error("UnknownEdge: {{{0}, {1}}} is not an edge of the graph")]
    UnknownEdge(VertexId, VertexId),

    // vertex functions and the operator
    #[error("MissingNeighborValue: function has no value at {0}")]
    MissingNeighborValue(VertexId),
    #[error("MissingEndpointValue: function has no value at {0}")]
    MissingEndpointValue(VertexId),
    #[error("SupportTouchesBoundary: neither function is supported in the interior (offending vertex {0})")]
    SupportTouchesBoundary(VertexId),
    #[error("EmptyInterior: region has no interior vertices")]
    EmptyInterior,
    #[error("DisconnectedInterior: interior of the region is not connected")]
    DisconnectedInterior,
    #[error("UnboundedMetadata: {0} is neither declared nor derivable")]
    UnboundedMetadata(&'static str),
    #[error("LengthMismatch: domain has {domain} vertices but {values} values were given")]
    LengthMismatch { domain: usize, values: usize },

    // spectral
    #[error("NoConvergence: eigensolver stopped after {0} iterations")]
    NoConvergence(usize),
    #[error("ScheduleTooShort: {0}")]
    ScheduleTooShort(String),
    #[error("ZeroFunction: Rayleigh quotient of the zero function")]
    ZeroFunction,
    #[error("SignViolation: eigenfunction takes value {value} at interior vertex {vertex}")]
    SignViolation { vertex: VertexId, value: f64 },
    #[error("DegenerateGroundEigenvalue: gap {0} between the two smallest eigenvalues")]
    DegenerateGroundEigenvalue(f64),
    #[error("MonotonicityViolation: lambda rose from {previous} to {current} at level {level}")]
    MonotonicityViolation { level: usize, previous: f64, current: f64 },
    #[error("EnvelopeViolation: ground state value {value} at {vertex} leaves [{lower}, {upper}]")]
    EnvelopeViolation { vertex: VertexId, value: f64, lower: f64, upper: f64 },
    #[error("NotPositiveDefinite: nonpositive pivot {0} during factorization")]
    NotPositiveDefinite(f64),

    // isoperimetry
    #[error("EmptySet: isoperimetric quotient of the empty set")]
    EmptySet,
    #[error("FamilyEmpty: subset family produced no admissible set")]
    FamilyEmpty,

    // heat
    #[error("NegativeTime: t = {0}")]
    NegativeTime(f64),
    #[error("UnboundedOperatorMetadata: heat certificates need finite weight and degree bounds")]
    UnboundedOperatorMetadata,
    #[error("NonzeroPotential: the heat semigroup on a generated graph requires W = 0")]
    NonzeroPotential,
    #[error("NegativePotential: W({vertex}) = {value} < 0")]
    NegativePotential { vertex: VertexId, value: f64 },
    #[error("GrowthNotDeclared: initial data on an infinite graph needs a growth bound")]
    GrowthNotDeclared,
    #[error("StepTooLarge: step {step} exceeds the stability limit {limit}")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("NonpositiveGroundState: phi({vertex}) = {value}")]
    NonpositiveGroundState { vertex: VertexId, value: f64 },
    #[error("EnvelopeUnavailable: growth envelope needs gamma, Gamma and M")]
    EnvelopeUnavailable,
    #[error("TruncationTooLarge: no truncation radius up to {0} meets the error budget")]
    TruncationTooLarge(usize),

    // verify
    #[error("InputNotSupersolution: Lf({vertex}) = {value} < 0")]
    InputNotSupersolution { vertex: VertexId, value: f64 },
    #[error("NonpositiveFunction: f({vertex}) = {value}")]
    NonpositiveFunction { vertex: VertexId, value: f64 },
    #[error("NotInteriorEdge: {{{0}, {1}}} is not an edge between interior vertices")]
    NotInteriorEdge(VertexId, VertexId),
    #[error("MetadataMissing: {0}")]
    MetadataMissing(&'static str),
    #[error("HypothesisFailed: {0}")]
    HypothesisFailed(String),
    #[error("InvalidSamples: {0}")]
    InvalidSamples(String),

    // oracle
    #[error("NotSymmetric: entries ({i}, {j}) and ({j}, {i}) differ by {diff}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("TooLarge: size {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },

    // parameters and files
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("Parse: {0}")]
    Parse(String),
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by malformed or inadmissible user input, as opposed to
    /// failures of a computation on admissible input.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::LoopEdge(_)
            | Error::DuplicateEdge(..)
            | Error::NonpositiveWeight { .. }
            | Error::UnknownVertex(_)
            | Error::UnknownEdge(..)
            | Error::LengthMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::Parse(_)
            | Error::Io(_) => true,
            Error::AtLine { source, .. } => source.is_input_error(),
            _ => false,
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Error {
        Error::AtLine { line, source: Box::new(self) }
    }
}
