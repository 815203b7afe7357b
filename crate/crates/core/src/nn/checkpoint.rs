//! fp32 checkpoint: the shared header (see [`crate::format`]) followed by every
//! parameter tensor in declaration order (weight, then bias, per learnable
//! layer) as little-endian `f32`. Tensor shapes follow from the spec, so no
//! per-tensor metadata is stored.

use super::network::NetParams;
use super::tensor::Tensor;
use crate::format::{read_header, write_header, FormatError, Reader};

pub const FP32_MAGIC: &[u8; 4] = b"TLNF";

pub fn encode_checkpoint(params: &NetParams<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 4 * params.num_values());
    write_header(&mut out, FP32_MAGIC, params.spec());
    for t in params.tensors() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<NetParams<f32>, FormatError> {
    let mut r = Reader::new(bytes);
    let spec = read_header(&mut r, FP32_MAGIC)?;
    let shapes: Vec<Vec<usize>> = spec
        .learnable()
        .flat_map(|(_, l)| {
            [
                l.weight_shape().expect("learnable"),
                vec![l.bias_len().expect("learnable")],
            ]
        })
        .collect();
    let needed: usize = shapes
        .iter()
        .map(|s| s.iter().product::<usize>())
        .sum::<usize>()
        * 4;
    if r.remaining() < needed {
        return Err(FormatError::Truncated {
            offset: bytes.len(),
            needed: needed - r.remaining(),
        });
    }
    let mut tensors = Vec::with_capacity(shapes.len());
    for shape in &shapes {
        let n: usize = shape.iter().product();
        let data: Vec<f32> = r
            .take(4 * n)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk")))
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::Invalid("non-finite parameter".into()));
        }
        tensors.push(Tensor::from_vec(shape, data).expect("shape"));
    }
    r.finish()?;
    NetParams::from_tensors(spec, tensors).map_err(|e| FormatError::Invalid(e.to_string()))
}
