//! Reference-based super-resolution building blocks: coarse-to-fine patch
//! correspondence with an exhaustive oracle and op accounting, statistics
//! remapping, dual residual fusion, quality metrics, and an end-to-end
//! texture-transfer pipeline.

pub mod adaptation;
pub mod error;
pub mod feature;
pub mod fusion;
pub mod matching;
pub mod metrics;
pub mod pipeline;
pub mod weights;

pub use error::{Error, Result, StageContext};
