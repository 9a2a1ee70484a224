use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for a graph with {num_vertices} vertices")]
    VertexOutOfRange { vertex: usize, num_vertices: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("search budget of {budget} extensions exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("state space too large: {num_vertices} vertices exceeds the budget of {limit}")]
    StateSpaceTooLarge { num_vertices: usize, limit: usize },
    #[error("tied event times at t = {0}")]
    TiedEvents(f64),
    #[error("time window ({start}, {end}] lies outside the horizon {horizon}")]
    WindowOutOfRange { start: f64, end: f64, horizon: f64 },
    #[error("power iteration did not converge within {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("empty admissible window for h at q = {q}, d = {d}")]
    EmptyWindow { q: f64, d: usize },
    #[error("not a chain: {0}")]
    NotAChain(crate::graph::ChainViolation),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
