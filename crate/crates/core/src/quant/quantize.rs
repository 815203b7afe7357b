use super::calibrate::Calibration;
use super::{QuantError, QuantParams};
use crate::nn::{ActShape, LayerSpec, NetParams, NetSpec};

/// Fractional bits of the normalized requantization mantissa.
pub const MANTISSA_BITS: u32 = 21;
/// Smallest weight scale; keeps all-zero tensors well defined.
pub const WEIGHT_SCALE_FLOOR: f32 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QLayerKind {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        in_len: usize,
        out_len: usize,
    },
    Dense {
        in_features: usize,
        out_features: usize,
    },
}

impl QLayerKind {
    pub fn fan_in(&self) -> usize {
        match *self {
            QLayerKind::Conv1d {
                in_channels,
                kernel_size,
                ..
            } => in_channels * kernel_size,
            QLayerKind::Dense { in_features, .. } => in_features,
        }
    }

    pub fn out_channels(&self) -> usize {
        match *self {
            QLayerKind::Conv1d { out_channels, .. } => out_channels,
            QLayerKind::Dense { out_features, .. } => out_features,
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            QLayerKind::Conv1d {
                in_channels,
                in_len,
                ..
            } => in_channels * in_len,
            QLayerKind::Dense { in_features, .. } => in_features,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            QLayerKind::Conv1d {
                out_channels,
                out_len,
                ..
            } => out_channels * out_len,
            QLayerKind::Dense { out_features, .. } => out_features,
        }
    }
}

/// One quantized Conv1D or Dense layer, with its ReLU (if any) fused.
#[derive(Clone, Debug, PartialEq)]
pub struct QLayer {
    pub kind: QLayerKind,
    /// Same layout as the fp32 weight tensor.
    pub weights: Vec<i8>,
    pub weight_scale: f32,
    /// Quantized with scale `input.scale * weight_scale`, zero point 0.
    pub bias: Vec<i32>,
    pub input: QuantParams,
    pub output: QuantParams,
    pub mantissa: i32,
    /// Extra right shift on top of [`MANTISSA_BITS`], in `[0, 31]`.
    pub shift: u32,
    pub relu: bool,
}

impl QLayer {
    /// Effective real multiplier `mantissa / 2^(MANTISSA_BITS + shift)`.
    pub fn multiplier(&self) -> f64 {
        self.mantissa as f64 / 2f64.powi((MANTISSA_BITS + self.shift) as i32)
    }

    /// Lower clamp of the requantized output.
    pub fn clamp_min(&self) -> i32 {
        if self.relu {
            self.output.zero_point
        } else {
            -128
        }
    }

    /// Largest possible `|acc|` for any int8 input.
    pub fn accumulator_bound(&self) -> i64 {
        let max_bias = self
            .bias
            .iter()
            .map(|b| (*b as i64).abs())
            .max()
            .unwrap_or(0);
        self.kind.fan_in() as i64 * 127 * 255 + max_bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedNet {
    pub spec: NetSpec,
    pub input: QuantParams,
    pub layers: Vec<QLayer>,
}

impl QuantizedNet {
    pub fn input_length(&self) -> usize {
        self.spec.input_length
    }

    pub fn quantize_input(&self, x: &[f32]) -> Vec<i8> {
        x.iter().map(|v| self.input.quantize(*v)).collect()
    }

    /// Dequantized weights of layer `n`.
    pub fn dequantized_weights(&self, n: usize) -> Vec<f32> {
        let l = &self.layers[n];
        l.weights
            .iter()
            .map(|q| *q as f32 * l.weight_scale)
            .collect()
    }
}

/// Symmetric per-tensor weight quantization: scale `max|w| / 127`.
pub fn quantize_weights(w: &[f32]) -> (Vec<i8>, f32) {
    let max = w.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    let scale = (max / 127.0).max(WEIGHT_SCALE_FLOOR);
    let q = w
        .iter()
        .map(|v| (*v as f64 / scale as f64).round().clamp(-127.0, 127.0) as i8)
        .collect();
    (q, scale)
}

/// Encodes `m` in `(0, 1)` as `mantissa / 2^(MANTISSA_BITS + shift)`.
pub(crate) fn encode_multiplier(m: f64) -> (i32, u32) {
    debug_assert!(m > 0.0 && m < 1.0);
    let one = 1i64 << MANTISSA_BITS;
    // m = f * 2^-shift, f in [0.5, 1)
    let mut f = m;
    let mut shift = 0u32;
    while f < 0.5 {
        f *= 2.0;
        shift += 1;
    }
    let mut mant = (f * one as f64).round() as i64;
    if mant == one {
        if shift == 0 {
            mant = one - 1;
        } else {
            mant = one / 2;
            shift -= 1;
        }
    }
    if shift > 31 {
        // below the normalized range: denormalize at the largest shift
        mant = (m * 2f64.powi((MANTISSA_BITS + 31) as i32)).round() as i64;
        shift = 31;
    }
    (mant as i32, shift)
}

/// Builds the int8 network from fp32 parameters and calibrated ranges.
pub fn quantize(params: &NetParams<f32>, calib: &Calibration) -> Result<QuantizedNet, QuantError> {
    let spec = params.spec();
    let shapes = spec
        .shapes()
        .map_err(|e| QuantError::Network(e.to_string()))?;
    let n_learnable = spec.learnable().count();
    if calib.layers.len() != n_learnable {
        return Err(QuantError::CalibrationMismatch {
            expected: n_learnable,
            got: calib.layers.len(),
        });
    }
    let input = QuantParams::from_range(calib.input.min, calib.input.max);
    let mut in_q = input;
    let mut layers = Vec::with_capacity(n_learnable);
    for (n, (idx, layer)) in spec.learnable().enumerate() {
        let kind = match (*layer, shapes[idx], shapes[idx + 1]) {
            (
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel_size,
                    stride,
                },
                ActShape::Seq { len: in_len, .. },
                ActShape::Seq { len: out_len, .. },
            ) => QLayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
                in_len,
                out_len,
            },
            (
                LayerSpec::Dense {
                    in_features,
                    out_features,
                },
                _,
                _,
            ) => QLayerKind::Dense {
                in_features,
                out_features,
            },
            _ => unreachable!("validated spec"),
        };
        let (w, b) = params.layer(n);
        let (weights, weight_scale) = quantize_weights(w.data());
        let acc_scale = in_q.scale as f64 * weight_scale as f64;
        let bias = b
            .data()
            .iter()
            .map(|v| {
                (*v as f64 / acc_scale)
                    .round()
                    .clamp(i32::MIN as f64, i32::MAX as f64) as i32
            })
            .collect();
        let range = calib.layers[n];
        let mut output = QuantParams::from_range(range.min, range.max);
        // keep the multiplier below one by coarsening the output grid if needed
        let lo = range.min.min(0.0);
        while acc_scale / output.scale as f64 >= 1.0 {
            let hi = lo + 255.0 * (acc_scale as f32) * 1.000_001;
            output = QuantParams::from_range(lo, hi.max(output.scale * 255.0 * 1.000_001 + lo));
        }
        let (mantissa, shift) = encode_multiplier(acc_scale / output.scale as f64);
        let q = QLayer {
            kind,
            weights,
            weight_scale,
            bias,
            input: in_q,
            output,
            mantissa,
            shift,
            relu: spec.followed_by_relu(idx),
        };
        let bound = q.accumulator_bound();
        if bound >= 1i64 << 31 {
            return Err(QuantError::AccumulatorOverflow { layer: n, bound });
        }
        in_q = output;
        layers.push(q);
    }
    Ok(QuantizedNet {
        spec: spec.clone(),
        input,
        layers,
    })
}
