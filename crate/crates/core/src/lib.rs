//! Lévy walks, their coupled scaling limits, and the transform identities
//! that describe the law of the limit process.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod config;
pub mod error;
pub mod limit;
pub mod paths;
pub mod rng;
pub mod stable;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};

/// Version string embedded in every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
