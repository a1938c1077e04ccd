//! Exact desk-scale laboratory for matchgate (free-fermion) Born
//! distributions: circuits, Pfaffian amplitudes, the parity distribution
//! family and its fermionized embedding, statistical-query and sample
//! oracles, and the learners used to probe them.
//!
//! Bit order is shared by every module: position 0 of a string is wire 0
//! and the most significant bit of its dense-table index.

pub mod bits;
pub mod dist;
pub mod embed;
pub mod format;
pub mod gates;
pub mod learn;
pub mod oracle;
pub mod pfaffian;
pub mod rng;
pub mod simulate;

pub use bits::BitString;
pub use dist::{Evaluator, NoiseRate, Secret};
pub use embed::{embed_noisy_parity, embed_parity, EmbeddedCircuit, EmbeddingPlan};
pub use gates::{validate_circuit, Gate2Q, GateKind, MatchgateCircuit};
pub use oracle::{OracleMode, SampleOracle, StatOracle, StatQuery};
pub use simulate::{born_distribution, tvd, DistributionTable};
