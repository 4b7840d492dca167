use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain specification: {0}")]
    InvalidSpec(String),

    #[error("grid too coarse: no interior nodes")]
    GridTooCoarse,

    #[error("domain not bounded within bounding box")]
    Unbounded,

    #[error("grid has {nodes} nodes, above the cap of {cap}")]
    GridTooLarge { nodes: usize, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("levelset expression: {0}")]
    Expression(String),

    #[error("empty region")]
    EmptyRegion,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("norm equivalence violated for {pair}: ratio {ratio} outside [{lower}, {upper}] for matrix {matrix}")]
    EquivalenceViolated {
        pair: String,
        ratio: f64,
        lower: f64,
        upper: f64,
        matrix: String,
    },

    #[error("normal field condition violated: {what} = {value} at {location:?}")]
    NormalFieldViolation {
        what: &'static str,
        value: f64,
        location: [f64; 3],
    },

    #[error("maximum principle violated: interior sup {interior} exceeds boundary sup {boundary}")]
    MaxPrincipleViolated { interior: f64, boundary: f64 },

    #[error("singular moment of inertia (degenerate region)")]
    SingularInertia,

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
