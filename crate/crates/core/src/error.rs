use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph is disconnected: node {unreachable} is unreachable from node 1")]
    DisconnectedGraph { unreachable: usize },

    #[error("invalid edge ({0}, {1}) for a graph on {2} nodes")]
    InvalidEdge(usize, usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("consensus step size is unstable: smallest eigenvalue {min_eigenvalue:.6} <= -1")]
    UnstableStepSize { min_eigenvalue: f64 },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})"
    )]
    ConvergenceFailure { sweeps: usize, residual: f64 },

    #[error("index diverges: |lambda_{index}| = {magnitude} is not below 1")]
    DivergentIndex { index: usize, magnitude: f64 },

    #[error("singular matrix in dense solve")]
    SingularMatrix,

    #[error("arm {arm} out of range for {num_arms} arms")]
    InvalidArm { arm: usize, num_arms: usize },

    #[error("arm means are not distinct (arms {0} and {1})")]
    DuplicateMeans(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("agent {agent} has no samples of arm {arm}")]
    UnsampledArm { agent: usize, arm: usize },

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("operation requires Gaussian rewards")]
    UnsupportedRewardKind,

    #[error("best arm mean {0} is not positive; the constrained regret bound is vacuous")]
    NonpositiveBestMean(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical model rather than of user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnstableStepSize { .. }
                | Error::ConvergenceFailure { .. }
                | Error::DivergentIndex { .. }
                | Error::SingularMatrix
                | Error::NonpositiveBestMean(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
