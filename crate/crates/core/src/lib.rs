//! Core algorithms for a desk-scale transfer-learning laboratory.
//!
//! Everything here operates on exact finite labeled supports: mixture
//! distributions with known point masses, feature extractors composed with a
//! linear head, seeded deterministic training with an explicit L1 gate path,
//! linear and NTK-linearized probing, brute-force affine oracles, and
//! fixed-compute concatenation ensembles.
//!
//! The crate is `no_std` (with `alloc`); all floating-point math goes through
//! [`libm`] so results are identical across platforms. IO, file formats, and
//! the command-line front end live in the companion `satlab` crate.

#![no_std]
#![deny(unsafe_code)]
// validation uses `!(x > 0.0)` so NaN fails the checks too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ensembles;
pub mod error;
pub mod mixtures;
pub mod models;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod training;
pub mod transfer;

pub use error::{Error, Result};
