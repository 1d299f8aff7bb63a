use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// `K_n` has a logarithmic (or pole) singularity at the origin.
    #[error("K_n(z) is singular at z = 0")]
    BesselAtZero,
    #[error("K_{order}(z) is not representable at z = {re}{im:+}i; use the scaled form")]
    BesselOverflow { order: u32, re: f64, im: f64 },
    #[error("argument {re}{im:+}i lies outside the closed right half-plane")]
    BesselBranch { re: f64, im: f64 },
    #[error("evaluation point coincides with a source point")]
    CoincidentPoints,
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("least-squares input contains non-finite entries")]
    NonFinite,
    #[error("least-squares system is empty")]
    EmptySystem,
    #[error("system has fewer rows ({rows}) than columns ({cols})")]
    Underdetermined { rows: usize, cols: usize },
    #[error("right-hand side has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("unknown shape tag `{0}`")]
    UnknownShape(String),
    #[error("transform solve failed at Talbot node {node}: {source}")]
    Node { node: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_node(self, node: usize) -> Error {
        Error::Node {
            node,
            source: Box::new(self),
        }
    }
}
