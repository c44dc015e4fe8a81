//! Alignment-free classification of amino-acid sequences.

pub mod alphabet;
pub mod codec;
pub mod error;
pub mod features;
pub mod infogain;
pub mod ingest;
pub mod linalg;
pub mod linear_models;
pub mod metrics;
pub mod model;
pub mod neural_net;
pub mod pipeline;
pub mod rff;
pub mod rng;
pub mod sparse;

pub use error::{Error, ErrorClass, Result};
