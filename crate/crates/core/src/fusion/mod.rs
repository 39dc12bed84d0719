//! Convolution primitives and the dual residual aggregation forward pass.

mod conv;
mod dram;

pub use conv::{conv2d, deconv2d, ConvKernel, DeconvKernel};
pub use dram::{dram_forward, dram_trace, DramMode, DramTrace, DramWeights};
