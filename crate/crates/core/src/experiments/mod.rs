//! Statistical experiments: uniform-distortion recurrence, measure-transport
//! sandwich checks, and the nested measure-decay simulation.
//!
//! Trials are independent and run in parallel; every trial draws from its
//! own counter-based substream of the experiment seed and aggregation is a
//! pure fold over trial-indexed records, so results are identical under any
//! execution order and thread count.

mod decay;
mod recurrence;
mod transport;

pub use decay::{decay_experiment, DecayConfig, DecayExperiment, DecayLevel};
pub use recurrence::{recurrence_experiment, RecurrenceConfig, RecurrenceStats, TrialRecord};
pub use transport::{eq1_transport_check, TransportReport};
