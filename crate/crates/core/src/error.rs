//! Error type shared by every layer of the crate.

use thiserror::Error;

/// Failures raised by channel, planning, scheme and simulation operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwicError {
    /// A signal vector does not have the length of its direction.
    #[error("invalid signal: expected length {expected}, got {got}")]
    InvalidSignal { expected: usize, got: usize },
    /// A malformed argument (out-of-range index, bad constraint set, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The constraint system does not bound the rate pair.
    #[error("unbounded constraint system")]
    Unbounded,
    /// The channel is in the central interval and is used whole.
    #[error("channel ({n},{m}) is not decomposable")]
    NotDecomposable { n: usize, m: usize },
    /// The requested rate pair is not a vertex of the capacity region.
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    /// Scheme parameters violate a shape constraint; the message names it.
    #[error("infeasible scheme {kind}: violates {inequality}")]
    Infeasible { kind: String, inequality: String },
    /// A node policy produced an unusable transmission.
    #[error("protocol violation at node {node}, slot {slot}: {detail}")]
    ProtocolViolation { node: String, slot: usize, detail: String },
    /// The scheme generator could not realise the requested configuration.
    #[error("construction failed: {0}")]
    Construction(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, TwicError>;
