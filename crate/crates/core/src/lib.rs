//! Bit-exact laboratory for the two-way linear deterministic interference
//! channel: capacity formulas, region geometry, network decomposition, coding
//! schemes with symbolic verification, and a slot-level simulator.

pub mod capacity;
pub mod cli;
pub mod carrier;
pub mod channel;
pub mod decomposition;
pub mod engine;
pub mod error;
pub mod gf2;
pub mod planner;
pub mod schemes;
pub mod simulator;

pub use capacity::{RatePair, RegionSpec};
pub use channel::{ChannelParams, Direction, SignalVector, Q};
pub use error::{Result, TwicError};
