//! Online classification over mixed-type, incomplete and drifting feature
//! streams, with a benchmark harness.

pub mod bench;
pub mod copula;
pub mod drift;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod ingest;
pub mod learners;
pub mod pseudo;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
