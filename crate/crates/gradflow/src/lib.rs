//! Metric-aware gradient flow for small dense networks.

pub mod bayes;
pub mod error;
pub mod harness;
pub mod losses;
pub mod metric;
pub mod network;
pub mod objective;
pub mod optim;
pub mod oracles;
pub mod scalar;
pub mod tape;

pub use error::{Error, Result};
