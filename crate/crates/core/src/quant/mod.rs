//! Post-training int8 quantization and pure-integer inference.
//!
//! Weights are quantized symmetrically per tensor, activations asymmetrically
//! from calibrated ranges. Each learnable layer accumulates `i8 x i8` products
//! in `i32` and rescales with a fixed-point multiplier:
//!
//! ```text
//! q_out = clamp(zp_out + round_half_away(acc * mantissa / 2^(21 + shift)), lo, 127)
//! ```
//!
//! where `mantissa` is normalized to `[2^20, 2^21)` and `lo` is `zp_out` for
//! layers with a fused ReLU and `-128` otherwise. Keeping the mantissa at 21
//! bits bounds `|acc * mantissa|` below `2^52`, so the product is exact in
//! both `i64` and `f64`.

mod calibrate;
mod format;
mod kernels;
mod quantize;

use thiserror::Error;

pub use calibrate::{
    calibrate, calibration_inputs, Calibration, Range, CALIBRATION_SAMPLES, DEGENERATE_RANGE,
};
pub use format::{decode_quantized, encode_quantized, INT8_MAGIC};
pub use kernels::{forward_int8, forward_int8_trace, requantize, rounding_shift, Int8Engine};
pub use quantize::{
    quantize, quantize_weights, QLayer, QLayerKind, QuantizedNet, MANTISSA_BITS, WEIGHT_SCALE_FLOOR,
};

#[derive(Debug, Error, PartialEq)]
pub enum QuantError {
    #[error("empty calibration set")]
    EmptyCalibration,
    #[error("calibration covers {got} layers, network has {expected}")]
    CalibrationMismatch { expected: usize, got: usize },
    #[error("input: expected length {expected}, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("layer {layer}: worst-case accumulator {bound} does not fit in i32")]
    AccumulatorOverflow { layer: usize, bound: i64 },
    #[error("network: {0}")]
    Network(String),
}

/// Affine int8 mapping `real = scale * (q - zero_point)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantParams {
    pub scale: f32,
    pub zero_point: i32,
}

/// Rounds half away from zero (`f64::round` semantics) and saturates to int8.
fn saturate_i8(v: f64) -> i8 {
    v.round().clamp(-128.0, 127.0) as i8
}

impl QuantParams {
    /// Asymmetric parameters covering `[min, max]` widened to include zero.
    pub fn from_range(min: f32, max: f32) -> QuantParams {
        let lo = min.min(0.0) as f64;
        let mut hi = max.max(0.0) as f64;
        if hi - lo < DEGENERATE_RANGE as f64 {
            hi = lo + DEGENERATE_RANGE as f64;
        }
        let scale = ((hi - lo) / 255.0) as f32;
        let zero_point = (-128.0 - lo / scale as f64).round().clamp(-128.0, 127.0) as i32;
        QuantParams { scale, zero_point }
    }

    pub fn quantize(&self, x: f32) -> i8 {
        saturate_i8(x as f64 / self.scale as f64 + self.zero_point as f64)
    }

    pub fn dequantize(&self, q: i8) -> f32 {
        (self.scale as f64 * (q as i32 - self.zero_point) as f64) as f32
    }
}
