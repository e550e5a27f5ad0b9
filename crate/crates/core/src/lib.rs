//! Exact-arithmetic network-flow construction of left-c.e. semi-measures on
//! the binary tree, truncated at a finite depth.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line and all IO live in the `semiflow` companion crate.
//!
//! Layout:
//! - [`rational`], [`bits`], [`codec`]: exact numbers, strings, pairings and
//!   the task schedule.
//! - [`network`], [`flow`]: delays, extra edges, in-flow `R`, q-flow `P`.
//! - [`engine`]: the stage-by-stage construction with its event log.
//! - [`catalog`], [`predicate`], [`ledger`]: the requirement predicates and
//!   the tests their fired edges enumerate.
//! - [`bridge`]: push-forward measures, `P̄` brackets, interval allocation
//!   and the seeded sampler.
//! - [`harness`]: independent re-derivation of every finite-depth claim.

#![no_std]

extern crate alloc;

pub mod bits;
pub mod bridge;
pub mod catalog;
pub mod codec;
pub mod engine;
pub mod error;
pub mod flow;
pub mod harness;
pub mod ledger;
pub mod network;
pub mod predicate;
pub mod rational;

pub use bits::BitString;
pub use error::Error;
pub use rational::Rational;
