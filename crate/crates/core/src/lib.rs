//! Dynamic matching markets with easy-to-match (E) and hard-to-match (H)
//! agents: compatibility models, exact matching, event-driven simulation of
//! greedy, patient and batching policies, summary statistics and analytic
//! predictions.

// Negated float comparisons below reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod compat;
pub mod error;
pub mod matching;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod theory;

pub use compat::{AgentType, CompatModel, CompatibilityGraph, Matching, MatrixPool, Participant};
pub use error::{Error, Result};
