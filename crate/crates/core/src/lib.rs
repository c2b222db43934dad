pub mod discretize;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod kle;
pub mod moments;
pub mod perf;
pub mod quality;
pub mod rng;
pub mod ssv;

pub use error::{Error, ErrorKind, Result};
