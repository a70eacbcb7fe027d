use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in field at node {node}")]
    NonFinite { node: usize },

    /// The map is outside the chart neighborhood around the identity.
    #[error("outside chart neighborhood: {0}")]
    ChartViolation(String),

    #[error("orientation lost: det(I + Du) = {det:.3e} at node {node}")]
    Orientation { node: usize, det: f64 },

    #[error("Newton inversion failed to converge at node {node} (residual {residual:.3e})")]
    InversionFailed { node: usize, residual: f64 },

    #[error("poor rotation vector: C_emp = {c_emp:.3e} below floor {floor:.3e} (worst k = {worst_k:?})")]
    PoorRotation {
        c_emp: f64,
        floor: f64,
        worst_k: Vec<i64>,
    },

    #[error("small divisor at k = {k:?}: |d| = {modulus:.3e} below certified bound {bound:.3e}")]
    CertificationBreach {
        k: Vec<i64>,
        modulus: f64,
        bound: f64,
    },

    #[error("Herman solver failed: {reason} (history {history:?})")]
    HermanFailed { reason: String, history: Vec<f64> },

    #[error("outside trust region: {0}")]
    TrustRegion(String),

    #[error("rotation {theta} is not reachable with base length s0 = {s0}; use s0 >= {needed:.4}")]
    Unreachable { theta: f64, s0: f64, needed: f64 },

    #[error("not leaf-preserving: {0}")]
    NotLeafPreserving(String),

    #[error("support violation: {0}")]
    Support(String),

    #[error("leaf {leaf}: {source}")]
    Leaf {
        leaf: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("chart {chart}, foliation {foliation}: {source}")]
    Stage {
        chart: usize,
        foliation: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the root cause is a solver divergence rather than bad input.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::HermanFailed { .. } | Error::InversionFailed { .. } => true,
            Error::Leaf { source, .. } | Error::Stage { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
