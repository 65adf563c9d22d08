use thiserror::Error;

/// Errors raised by the simulator's building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A node cannot cover its committed consumption from its energy budget.
    #[error("node {node} has an energy deficit of {deficit:e} J")]
    EnergyDeficit { node: usize, deficit: f64 },

    /// The operation needs at least one node or member and got none.
    #[error("empty {0}")]
    Empty(&'static str),

    /// One or more configuration invariants do not hold.
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    /// A configuration source could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
