use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpinError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpinError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge {u}-{v} joins two vertices on the same side")]
    NonBipartite { u: String, v: String },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("terminal sets overlap at `{0}`")]
    TerminalOverlap(String),
    #[error("terminals are not split across the two sides: {0}")]
    TerminalSides(String),
    #[error("vertex `{vertex}` has degree {degree}, bound is {bound}")]
    DegreeBoundViolated { vertex: String, degree: u32, bound: u32 },
    #[error("{kept} vertices remain after elimination, cap is {cap}")]
    TooLarge { kept: usize, cap: usize },
    #[error("partition function is zero")]
    ZeroPartitionFunction,
    #[error("outside the domain: {0}")]
    DomainError(String),
    #[error("parameters are not antiferromagnetic (beta*gamma >= 1)")]
    NotAntiferromagnetic,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("no transportation plan fits the marginals on the support of w")]
    Infeasible,
    #[error("infeasible sizes: {0}")]
    InfeasibleSizes(String),
    #[error("gave up after {0} rejected samples")]
    RejectionLimitExceeded(usize),
    #[error("not enough unoccupied terminals: {0}")]
    NotEnoughTerminals(String),
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl SpinError {
    /// Stable machine-readable name, used in CLI error objects.
    pub fn code(&self) -> &'static str {
        match self {
            SpinError::InvalidParameter(_) => "InvalidParameter",
            SpinError::NonBipartite { .. } => "NonBipartite",
            SpinError::UnknownVertex(_) => "UnknownVertex",
            SpinError::DuplicateVertex(_) => "DuplicateVertex",
            SpinError::TerminalOverlap(_) => "TerminalOverlap",
            SpinError::TerminalSides(_) => "TerminalSides",
            SpinError::DegreeBoundViolated { .. } => "DegreeBoundViolated",
            SpinError::TooLarge { .. } => "TooLarge",
            SpinError::ZeroPartitionFunction => "ZeroPartitionFunction",
            SpinError::DomainError(_) => "DomainError",
            SpinError::NotAntiferromagnetic => "NotAntiferromagnetic",
            SpinError::NoConvergence(_) => "NoConvergence",
            SpinError::Infeasible => "Infeasible",
            SpinError::InfeasibleSizes(_) => "InfeasibleSizes",
            SpinError::RejectionLimitExceeded(_) => "RejectionLimitExceeded",
            SpinError::NotEnoughTerminals(_) => "NotEnoughTerminals",
            SpinError::DegenerateInstance(_) => "DegenerateInstance",
            SpinError::DegenerateParameters(_) => "DegenerateParameters",
            SpinError::Parse(_) => "Parse",
        }
    }
}
