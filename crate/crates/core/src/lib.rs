//! Anytime-valid and fixed-time inference for the average treatment effect
//! in sequential adaptive experiments.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel replication live in the `seqate` crate.

#![no_std]
// Negated comparisons are used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod confseq;
pub mod error;
pub mod estimator;
pub mod numeric;
pub mod policy;
pub mod regression;
pub mod rng;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
