use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("arithmetic overflow: {0}")]
    ArithmeticOverflow(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("singular lattice: |det| = {det:e}")]
    SingularLattice { det: f64 },

    #[error("capacity exceeded: {what} needs {requested}, cap is {cap}")]
    Capacity {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("conditioning event never occurred in {samples} samples")]
    ConditioningStarved { samples: u64 },

    #[error("invalid interval union: {0}")]
    InvalidIntervals(String),
}

pub type Result<T> = std::result::Result<T, Error>;
