use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value {value} at {location}")]
    NonFinite { location: String, value: f64 },

    #[error("singular point: profile is not differentiable where the active coordinates vanish")]
    SingularPoint,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mollifier radius {delta} is under-resolved on spacing {spacing} (need delta >= 2h)")]
    UnderResolved { delta: f64, spacing: f64 },

    #[error("inadmissible policy at node {node}: eigenvalue {eigenvalue} outside [{lower}, {upper}]")]
    InadmissiblePolicy {
        node: usize,
        eigenvalue: f64,
        lower: f64,
        upper: f64,
    },

    #[error("time step {dt} violates the explicit stability limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("right-hand side must be nonnegative; node {node} has value {value}")]
    SignedData { node: usize, value: f64 },

    #[error("maximum principle violated: u = {value} at node {node}")]
    MaximumPrinciple { node: usize, value: f64 },

    #[error("not a subsolution: gap {gap} at node {node}")]
    NotSubsolution { node: usize, gap: f64 },

    #[error("bound violated: {quantity} = {value} exceeds {limit}")]
    Bound {
        quantity: String,
        value: f64,
        limit: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("field format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
