//! Deterministic generation of synthetic version histories for variant-rich
//! software systems.

pub mod addressing;
pub mod error;
pub mod generators;
pub mod history;
pub mod model;
pub mod ops;
pub mod report;
pub mod runner;
pub mod transplant;

pub use error::{Error, Result};
