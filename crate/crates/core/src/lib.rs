//! Coded gradient aggregation for hierarchical edge/helper/master learning.
//!
//! Edge nodes encode their split gradients with a client code and push the
//! coded pieces to helper nodes over straggling links; helpers aggregate
//! matching rows before forwarding to the master. This crate builds the
//! client codes (systematic MDS, pyramid, repetition), executes the
//! aggregation strategies on concrete erasure matrices, verifies that every
//! plan lets the master recover the summed gradient, and computes the
//! edge-cost/helper-cost tradeoff both exactly and by seeded Monte Carlo.

pub mod analysis;
pub mod codes;
pub mod erasures;
pub mod error;
pub mod field;
pub mod occupancy;
pub mod sim;
pub mod strategies;

pub use error::{Error, Result};
