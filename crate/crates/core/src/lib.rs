//! TinyLidarNet: a compact 1D-CNN LiDAR driving policy with training,
//! int8 quantization, a 2D raycast simulator and evaluation tooling.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod expert;
pub mod format;
pub mod nn;
pub mod policy;
pub mod quant;
pub mod scan;
pub mod sim;
pub mod zoo;
