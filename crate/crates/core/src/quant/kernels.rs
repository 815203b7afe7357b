use super::quantize::{QLayer, QLayerKind, QuantizedNet, MANTISSA_BITS};
use super::QuantError;

/// `round_half_away_from_zero(v / 2^n)` for `n >= 1`.
#[inline]
pub fn rounding_shift(v: i64, n: u32) -> i64 {
    let half = 1i64 << (n - 1);
    if v >= 0 {
        (v + half) >> n
    } else {
        -((-v + half) >> n)
    }
}

/// Rescales an accumulator into the output grid and clamps it.
#[inline]
pub fn requantize(acc: i32, layer: &QLayer) -> i8 {
    let scaled = rounding_shift(
        acc as i64 * layer.mantissa as i64,
        MANTISSA_BITS + layer.shift,
    );
    (scaled + layer.output.zero_point as i64).clamp(layer.clamp_min() as i64, 127) as i8
}

#[inline]
fn dot_i16(a: &[i16], b: &[i16]) -> i32 {
    a.iter().zip(b).map(|(x, y)| *x as i32 * *y as i32).sum()
}

fn run_layer(
    layer: &QLayer,
    w16: &[i16],
    x: &[i8],
    centered: &mut Vec<i16>,
    col: &mut Vec<i16>,
    out: &mut Vec<i8>,
) {
    let zp = layer.input.zero_point as i16;
    centered.clear();
    centered.extend(x.iter().map(|v| *v as i16 - zp));
    out.clear();
    match layer.kind {
        QLayerKind::Conv1d {
            in_channels,
            out_channels,
            kernel_size,
            stride,
            in_len,
            out_len,
        } => {
            let width = in_channels * kernel_size;
            col.clear();
            col.resize(out_len * width, 0);
            for t in 0..out_len {
                let row = &mut col[t * width..(t + 1) * width];
                for ci in 0..in_channels {
                    let src = ci * in_len + t * stride;
                    row[ci * kernel_size..(ci + 1) * kernel_size]
                        .copy_from_slice(&centered[src..src + kernel_size]);
                }
            }
            out.resize(out_channels * out_len, 0);
            for co in 0..out_channels {
                let w = &w16[co * width..(co + 1) * width];
                for t in 0..out_len {
                    let acc = layer.bias[co] + dot_i16(w, &col[t * width..(t + 1) * width]);
                    out[co * out_len + t] = requantize(acc, layer);
                }
            }
        }
        QLayerKind::Dense {
            in_features,
            out_features,
        } => {
            for o in 0..out_features {
                let w = &w16[o * in_features..(o + 1) * in_features];
                let acc = layer.bias[o] + dot_i16(w, centered);
                out.push(requantize(acc, layer));
            }
        }
    }
}

fn widen(qnet: &QuantizedNet) -> Vec<Vec<i16>> {
    qnet.layers
        .iter()
        .map(|l| l.weights.iter().map(|v| *v as i16).collect())
        .collect()
}

fn check_input(qnet: &QuantizedNet, len: usize) -> Result<(), QuantError> {
    if len != qnet.input_length() {
        return Err(QuantError::InputLength {
            expected: qnet.input_length(),
            got: len,
        });
    }
    Ok(())
}

/// Reusable integer inference state: weights widened once, scratch buffers
/// kept between calls.
#[derive(Clone, Debug)]
pub struct Int8Engine<'a> {
    qnet: &'a QuantizedNet,
    w16: Vec<Vec<i16>>,
    centered: Vec<i16>,
    col: Vec<i16>,
    cur: Vec<i8>,
    next: Vec<i8>,
}

impl<'a> Int8Engine<'a> {
    pub fn new(qnet: &'a QuantizedNet) -> Self {
        Int8Engine {
            qnet,
            w16: widen(qnet),
            centered: Vec::new(),
            col: Vec::new(),
            cur: Vec::new(),
            next: Vec::new(),
        }
    }

    pub fn qnet(&self) -> &QuantizedNet {
        self.qnet
    }

    /// Integer forward pass on an already quantized input.
    pub fn run(&mut self, scan_q: &[i8]) -> Result<&[i8], QuantError> {
        check_input(self.qnet, scan_q.len())?;
        self.cur.clear();
        self.cur.extend_from_slice(scan_q);
        for (layer, w) in self.qnet.layers.iter().zip(&self.w16) {
            run_layer(
                layer,
                w,
                &self.cur,
                &mut self.centered,
                &mut self.col,
                &mut self.next,
            );
            std::mem::swap(&mut self.cur, &mut self.next);
        }
        Ok(&self.cur)
    }

    /// Quantizes `x`, runs the integer network and dequantizes the output.
    pub fn infer(&mut self, x: &[f32], out: &mut Vec<f32>) -> Result<(), QuantError> {
        check_input(self.qnet, x.len())?;
        let mut q = std::mem::take(&mut self.next);
        q.clear();
        q.extend(x.iter().map(|v| self.qnet.input.quantize(*v)));
        let p = self
            .qnet
            .layers
            .last()
            .map(|l| l.output)
            .unwrap_or(self.qnet.input);
        let res = self.run(&q).map(|y| {
            out.clear();
            out.extend(y.iter().map(|v| p.dequantize(*v)));
        });
        self.next = q;
        res
    }
}

/// Integer forward pass returning every intermediate int8 tensor: the
/// quantized input followed by the output of each learnable layer.
pub fn forward_int8_trace(qnet: &QuantizedNet, scan_q: &[i8]) -> Result<Vec<Vec<i8>>, QuantError> {
    check_input(qnet, scan_q.len())?;
    let w16 = widen(qnet);
    let mut acts = Vec::with_capacity(qnet.layers.len() + 1);
    acts.push(scan_q.to_vec());
    let (mut centered, mut col) = (Vec::new(), Vec::new());
    for (layer, w) in qnet.layers.iter().zip(&w16) {
        let mut out = Vec::new();
        run_layer(
            layer,
            w,
            acts.last().expect("input"),
            &mut centered,
            &mut col,
            &mut out,
        );
        acts.push(out);
    }
    Ok(acts)
}

/// Integer forward pass; only the final layer is dequantized.
pub fn forward_int8(qnet: &QuantizedNet, scan_q: &[i8]) -> Result<Vec<f32>, QuantError> {
    let p = qnet.layers.last().map(|l| l.output).unwrap_or(qnet.input);
    Ok(Int8Engine::new(qnet)
        .run(scan_q)?
        .iter()
        .map(|q| p.dequantize(*q))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_shift_is_half_away_from_zero() {
        assert_eq!(rounding_shift(3, 1), 2); // 1.5
        assert_eq!(rounding_shift(-3, 1), -2); // -1.5
        assert_eq!(rounding_shift(5, 2), 1); // 1.25
        assert_eq!(rounding_shift(6, 2), 2); // 1.5
        assert_eq!(rounding_shift(-6, 2), -2);
        assert_eq!(rounding_shift(-5, 2), -1);
        assert_eq!(rounding_shift(0, 30), 0);
    }

    proptest::proptest! {
        #[test]
        fn rounding_shift_matches_float_round(v in -(1i64 << 52)..(1i64 << 52), n in 1u32..53) {
            let expect = (v as f64 / 2f64.powi(n as i32)).round() as i64;
            proptest::prop_assert_eq!(rounding_shift(v, n), expect);
        }
    }
}
