use std::fmt;

use super::NnError;

/// One layer of a network topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    /// Valid (unpadded) 1-D convolution with bias.
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
    },
    /// Fully connected layer with bias.
    Dense {
        in_features: usize,
        out_features: usize,
    },
    Relu,
    Flatten,
}

impl LayerSpec {
    pub fn is_learnable(&self) -> bool {
        matches!(self, LayerSpec::Conv1d { .. } | LayerSpec::Dense { .. })
    }

    /// Weight tensor shape: `[out, in, k]` for convolutions, `[out, in]` for dense layers.
    pub fn weight_shape(&self) -> Option<Vec<usize>> {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => Some(vec![out_channels, in_channels, kernel_size]),
            LayerSpec::Dense {
                in_features,
                out_features,
            } => Some(vec![out_features, in_features]),
            _ => None,
        }
    }

    /// Weights plus biases; zero for parameter-free layers.
    pub fn param_count(&self) -> usize {
        match (self.weight_shape(), self.bias_len()) {
            (Some(w), Some(b)) => w.iter().product::<usize>() + b,
            _ => 0,
        }
    }

    pub fn bias_len(&self) -> Option<usize> {
        match *self {
            LayerSpec::Conv1d { out_channels, .. } => Some(out_channels),
            LayerSpec::Dense { out_features, .. } => Some(out_features),
            _ => None,
        }
    }

    /// Number of inputs feeding one output value.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                kernel_size,
                ..
            } => in_channels * kernel_size,
            LayerSpec::Dense { in_features, .. } => in_features,
            _ => 0,
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => write!(
                f,
                "Conv1D({in_channels}->{out_channels}, k={kernel_size}, s={stride})"
            ),
            LayerSpec::Dense {
                in_features,
                out_features,
            } => write!(f, "Dense({in_features}->{out_features})"),
            LayerSpec::Relu => f.write_str("ReLU"),
            LayerSpec::Flatten => f.write_str("Flatten"),
        }
    }
}

/// Shape of an activation between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActShape {
    /// Channel-major sequence `[channels, len]`.
    Seq {
        channels: usize,
        len: usize,
    },
    Flat(usize),
}

impl ActShape {
    pub fn numel(&self) -> usize {
        match *self {
            ActShape::Seq { channels, len } => channels * len,
            ActShape::Flat(n) => n,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            ActShape::Seq { channels, len } => vec![channels, len],
            ActShape::Flat(n) => vec![n],
        }
    }
}

impl fmt::Display for ActShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ActShape::Seq { channels, len } => write!(f, "[{channels}x{len}]"),
            ActShape::Flat(n) => write!(f, "[{n}]"),
        }
    }
}

/// `floor((len - kernel) / stride) + 1`, or `None` when the kernel does not fit.
pub fn conv_output_len(len: usize, kernel_size: usize, stride: usize) -> Option<usize> {
    if kernel_size == 0 || stride == 0 || len < kernel_size {
        return None;
    }
    Some((len - kernel_size) / stride + 1)
}

/// Network topology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetSpec {
    pub name: String,
    pub input_length: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetSpec {
    pub fn new(name: impl Into<String>, input_length: usize, layers: Vec<LayerSpec>) -> Self {
        NetSpec {
            name: name.into(),
            input_length,
            layers,
        }
    }

    /// Input activation shape; convolutional nets see a single-channel sequence.
    pub fn input_shape(&self) -> ActShape {
        match self.layers.iter().find(|l| l.is_learnable()) {
            Some(LayerSpec::Conv1d { in_channels, .. }) => ActShape::Seq {
                channels: *in_channels,
                len: self.input_length / (*in_channels).max(1),
            },
            _ => ActShape::Flat(self.input_length),
        }
    }

    /// Propagates shapes through every layer. Element `i` is the output shape of
    /// layer `i`; the input shape comes first, so the result has `layers.len() + 1` entries.
    pub fn shapes(&self) -> Result<Vec<ActShape>, NnError> {
        let mut cur = self.input_shape();
        if self.input_length == 0 || cur.numel() != self.input_length {
            return Err(NnError::InvalidSpec(format!(
                "input length {} incompatible with first layer",
                self.input_length
            )));
        }
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        out.push(cur);
        for (i, layer) in self.layers.iter().enumerate() {
            let bad = |msg: String| NnError::InvalidSpec(format!("layer {i} ({layer}): {msg}"));
            cur = match (*layer, cur) {
                (
                    LayerSpec::Conv1d {
                        in_channels,
                        out_channels,
                        kernel_size,
                        stride,
                    },
                    ActShape::Seq { channels, len },
                ) => {
                    if in_channels != channels {
                        return Err(bad(format!(
                            "expects {in_channels} channels, got {channels}"
                        )));
                    }
                    if out_channels == 0 {
                        return Err(bad("zero output channels".into()));
                    }
                    let l = conv_output_len(len, kernel_size, stride).ok_or_else(|| {
                        bad(format!(
                            "kernel {kernel_size}/stride {stride} does not fit length {len}"
                        ))
                    })?;
                    ActShape::Seq {
                        channels: out_channels,
                        len: l,
                    }
                }
                (LayerSpec::Conv1d { .. }, ActShape::Flat(_)) => {
                    return Err(bad("convolution after flatten".into()))
                }
                (
                    LayerSpec::Dense {
                        in_features,
                        out_features,
                    },
                    ActShape::Flat(n),
                ) => {
                    if in_features != n {
                        return Err(bad(format!("expects {in_features} inputs, got {n}")));
                    }
                    if out_features == 0 {
                        return Err(bad("zero output features".into()));
                    }
                    ActShape::Flat(out_features)
                }
                (LayerSpec::Dense { .. }, ActShape::Seq { .. }) => {
                    return Err(bad("dense layer needs a flattened input".into()))
                }
                (LayerSpec::Relu, s) => s,
                (LayerSpec::Flatten, s) => ActShape::Flat(s.numel()),
            };
            out.push(cur);
        }
        Ok(out)
    }

    pub fn output_len(&self) -> Result<usize, NnError> {
        Ok(self.shapes()?.last().map(|s| s.numel()).unwrap_or(0))
    }

    /// Indices (into `layers`) of the learnable layers, in declaration order.
    pub fn learnable(&self) -> impl Iterator<Item = (usize, &LayerSpec)> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_learnable())
    }

    /// Whether learnable layer `idx` (index into `layers`) is immediately followed by a ReLU.
    pub fn followed_by_relu(&self, idx: usize) -> bool {
        matches!(self.layers.get(idx + 1), Some(LayerSpec::Relu))
    }

    /// Total weights plus biases.
    pub fn count_params(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Multiply-accumulates of one forward pass. Bias adds and activations are not counted.
    pub fn count_macs(&self) -> usize {
        self.layer_macs().iter().sum()
    }

    /// Per-layer multiply-accumulates; all zeros when the spec is invalid.
    pub fn layer_macs(&self) -> Vec<usize> {
        let Ok(shapes) = self.shapes() else {
            return vec![0; self.layers.len()];
        };
        self.layers
            .iter()
            .zip(shapes.iter().skip(1))
            .map(|(layer, out)| match (*layer, *out) {
                (
                    LayerSpec::Conv1d {
                        in_channels,
                        out_channels,
                        kernel_size,
                        ..
                    },
                    ActShape::Seq { len, .. },
                ) => len * out_channels * kernel_size * in_channels,
                (
                    LayerSpec::Dense {
                        in_features,
                        out_features,
                    },
                    _,
                ) => in_features * out_features,
                _ => 0,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_10_to_2_counts() {
        let spec = NetSpec::new(
            "head",
            10,
            vec![LayerSpec::Dense {
                in_features: 10,
                out_features: 2,
            }],
        );
        assert_eq!(spec.count_params(), 22);
        assert_eq!(spec.count_macs(), 20);
    }

    #[test]
    fn empty_spec_counts_zero() {
        let spec = NetSpec::new("empty", 1, vec![]);
        assert_eq!(spec.count_params(), 0);
        assert_eq!(spec.count_macs(), 0);
    }

    #[test]
    fn mismatched_dense_is_rejected_with_layer_index() {
        let spec = NetSpec::new(
            "bad",
            8,
            vec![
                LayerSpec::Dense {
                    in_features: 8,
                    out_features: 4,
                },
                LayerSpec::Dense {
                    in_features: 5,
                    out_features: 2,
                },
            ],
        );
        let err = spec.shapes().unwrap_err().to_string();
        assert!(err.contains("layer 1"), "{err}");
        assert!(err.contains("expects 5"), "{err}");
    }

    #[test]
    fn kernel_longer_than_input_is_rejected() {
        let spec = NetSpec::new(
            "bad",
            3,
            vec![LayerSpec::Conv1d {
                in_channels: 1,
                out_channels: 1,
                kernel_size: 4,
                stride: 1,
            }],
        );
        assert!(spec.shapes().is_err());
    }

    proptest::proptest! {
        #[test]
        fn conv_output_len_formula(len in 1usize..400, k in 1usize..20, s in 1usize..8) {
            proptest::prop_assume!(len >= k);
            let out = conv_output_len(len, k, s).unwrap();
            proptest::prop_assert!(out >= 1);
            // last window fits, one more would not
            proptest::prop_assert!((out - 1) * s + k <= len);
            proptest::prop_assert!(out * s + k > len);
        }
    }
}
