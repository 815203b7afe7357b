//! int8 checkpoint: the shared header (see [`crate::format`]) with magic
//! `TLNQ`, then
//!
//! - input quantization: scale `f32`, zero point `i8`
//! - per learnable layer, in declaration order:
//!   weight scale `f32`, output scale `f32`, output zero point `i8`,
//!   requant mantissa `i32`, requant shift `u8`,
//!   weights as `i8` (fp32 layout), biases as `i32`.
//!
//! Layer input parameters and ReLU fusion are implied by the spec and the
//! previous layer, so they are not stored.

use super::quantize::{QLayer, QLayerKind, QuantizedNet, MANTISSA_BITS};
use super::QuantParams;
use crate::format::{read_header, write_header, FormatError, Reader};
use crate::nn::{ActShape, LayerSpec};

pub const INT8_MAGIC: &[u8; 4] = b"TLNQ";

pub fn encode_quantized(qnet: &QuantizedNet) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(&mut out, INT8_MAGIC, &qnet.spec);
    out.extend_from_slice(&qnet.input.scale.to_le_bytes());
    out.push(qnet.input.zero_point as i8 as u8);
    for l in &qnet.layers {
        out.extend_from_slice(&l.weight_scale.to_le_bytes());
        out.extend_from_slice(&l.output.scale.to_le_bytes());
        out.push(l.output.zero_point as i8 as u8);
        out.extend_from_slice(&l.mantissa.to_le_bytes());
        out.push(l.shift as u8);
        out.extend(l.weights.iter().map(|w| *w as u8));
        for b in &l.bias {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

fn read_scale(r: &mut Reader<'_>, what: &str) -> Result<f32, FormatError> {
    let s = r.f32()?;
    if !(s.is_finite() && s > 0.0) {
        return Err(FormatError::Invalid(format!(
            "{what} scale {s} is not positive"
        )));
    }
    Ok(s)
}

pub fn decode_quantized(bytes: &[u8]) -> Result<QuantizedNet, FormatError> {
    let mut r = Reader::new(bytes);
    let spec = read_header(&mut r, INT8_MAGIC)?;
    let shapes = spec
        .shapes()
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    let input = QuantParams {
        scale: read_scale(&mut r, "input")?,
        zero_point: r.i8()? as i32,
    };
    let mut in_q = input;
    let mut layers = Vec::new();
    for (idx, layer) in spec.learnable() {
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
            _ => return Err(FormatError::Invalid("layer shape mismatch".into())),
        };
        let weight_scale = read_scale(&mut r, "weight")?;
        let output = QuantParams {
            scale: read_scale(&mut r, "output")?,
            zero_point: r.i8()? as i32,
        };
        let mantissa = r.i32()?;
        if !(0..1 << MANTISSA_BITS).contains(&mantissa) {
            return Err(FormatError::Invalid(format!(
                "mantissa {mantissa} out of range"
            )));
        }
        let shift = r.u8()? as u32;
        if shift > 31 {
            return Err(FormatError::Invalid(format!("shift {shift} out of range")));
        }
        let n_w = layer
            .weight_shape()
            .expect("learnable")
            .iter()
            .product::<usize>();
        let weights = r.take(n_w)?.iter().map(|b| *b as i8).collect();
        let n_b = layer.bias_len().expect("learnable");
        let bias = r
            .take(4 * n_b)?
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().expect("chunk")))
            .collect();
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
        if q.accumulator_bound() >= 1i64 << 31 {
            return Err(FormatError::Invalid("accumulator bound exceeds i32".into()));
        }
        in_q = output;
        layers.push(q);
    }
    r.finish()?;
    Ok(QuantizedNet {
        spec,
        input,
        layers,
    })
}
