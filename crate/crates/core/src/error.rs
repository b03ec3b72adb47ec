use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular linear system (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("unstable routing: customers do not leave the network almost surely")]
    UnstableRouting,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("no common reference tail: {0}")]
    NoCommonReference(String),

    #[error("bounded inter-arrival support violates the unbounded-support assumption: {0}")]
    BoundedArrivals(String),

    #[error("instability detected: {0}")]
    Instability(String),

    #[error("routing degenerate: {0}")]
    RoutingDegenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cycle overflow after {events} events at time {time} ({customers} customers, {in_system} in system)")]
    CycleOverflow { events: u64, time: f64, customers: u64, in_system: u64 },

    #[error("too many overflowed cycles: {overflowed} of {total}")]
    OverflowRate { overflowed: u64, total: u64 },

    #[error("insufficient exceedances: observed {observed}, need at least {required}")]
    InsufficientExceedances { observed: u64, required: u64 },

    #[error("divergence guard tripped: {0}")]
    Divergence(String),
}
