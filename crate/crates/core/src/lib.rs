//! Confidence sets for moment-inequality models whose moments are computed by
//! simulation or prediction.
//!
//! The crate provides simulated moment construction, index functions with
//! μ-smooth approximations, two bootstrap critical-value procedures, example
//! models (intersection bounds and a two-player entry game) and a Monte Carlo
//! harness for coverage studies.

pub mod error;
pub mod harness;
pub mod index;
pub mod inference;
pub mod interval;
pub mod levelset;
pub mod models;
pub mod moments;
pub mod qp;
pub mod selfcheck;
pub mod stream;

pub use error::{Error, Result};
