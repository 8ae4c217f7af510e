//! Crate-wide error type.

/// Errors surfaced by circuit construction, simulation and mitigation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is malformed (bad qubit index, non-finite
    /// angle, mismatched lengths, out-of-range probability, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A circuit does not expose the structure an operation requires, e.g. a
    /// mitigation routine was handed a circuit with an empty gate pool.
    #[error("degenerate circuit: {0}")]
    DegenerateCircuit(String),

    /// A mitigation estimate hit a division by (numerically) zero, e.g. an
    /// estimated depolarization probability of one.
    #[error("singular estimate: {0}")]
    Singularity(String),

    /// The request exceeds a hard resource cap (dense simulation size).
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
