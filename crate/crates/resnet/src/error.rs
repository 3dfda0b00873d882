use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph: {0}")]
    MalformedGraph(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("nodes {s} and {t} are not connected (infinite resistance)")]
    InfiniteResistance { s: usize, t: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("right-hand side not in operator range (mean {mean:.3e} exceeds tolerance)")]
    InconsistentRhs { mean: f64 },

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("rows {s} and {t} coincide; 1/distance^2 weight overflows")]
    WeightOverflow { s: usize, t: usize },

    #[error("subsampling leaves {kept} nodes, need at least 3")]
    TooFewNodes { kept: usize },

    #[error("degenerate pair ({s},{t}): zero data distance")]
    DegeneratePair { s: usize, t: usize },

    #[error("invalid measurement column {column}: dissipation {value:.3e} not positive")]
    InvalidMeasurement { column: usize, value: f64 },

    #[error("grounding leaves floating nodes {nodes:?}")]
    FloatingIsland { nodes: Vec<usize> },

    #[error("unsupported constraints: {0}")]
    UnsupportedConstraints(String),

    #[error("hierarchy inconsistency: {0}")]
    HierarchyInconsistency(String),

    #[error("coarsening stalled at level {level} (ratio {ratio:.3})")]
    CoarseningStall { level: usize, ratio: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
