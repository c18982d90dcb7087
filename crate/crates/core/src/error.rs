use thiserror::Error;

/// Errors raised by graph construction, problem setup, the solver, and the
/// bound calculators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph is disconnected: {components} components")]
    DisconnectedGraph { components: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("node index {index} out of range for {node_count} nodes")]
    IndexOutOfRange { index: usize, node_count: usize },
    #[error("graph needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("{target} edges requested but a spanning tree on {nodes} nodes needs {}", nodes - 1)]
    TooFewEdges { target: usize, nodes: usize },
    #[error("infeasible regular degree {degree} on {nodes} nodes: {reason}")]
    InfeasibleDegree {
        nodes: usize,
        degree: usize,
        reason: &'static str,
    },
    #[error("graph generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("problem has {problem} nodes but graph has {graph}")]
    SizeMismatch { problem: usize, graph: usize },
    #[error("local system is not positive definite")]
    SingularSystem,
    #[error("aggregate Hessian is singular (min eigenvalue {min_eig:e}, max {max_eig:e})")]
    SingularAggregate { min_eig: f64, max_eig: f64 },
    #[error("bound requires strong convexity (m_f = {0})")]
    RequiresStrongConvexity(f64),
    #[error("delta must be positive, got {0}")]
    NonpositiveDelta(f64),
    #[error("degenerate convergence series: {0}")]
    DegenerateSeries(&'static str),
    #[error("reference solution has zero norm")]
    ZeroReference,
    #[error("trace tail has {available} samples, need at least {required}")]
    TooShort { available: usize, required: usize },
    #[error("local solver did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
