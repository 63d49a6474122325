//! Simulation and analysis toolkit for optically controlled spin qubits
//! in a five-level Λ system.

pub mod config;
pub mod error;
pub mod fitting;
pub mod lambda;
pub mod pulse;
pub mod quantum;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
