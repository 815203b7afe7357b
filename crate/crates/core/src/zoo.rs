//! Builders for the TinyLidarNet and MLP256 families.

use std::fmt;
use std::str::FromStr;

use crate::nn::{LayerSpec, NetSpec};
use crate::scan::NUM_BEAMS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelSize {
    L,
    M,
    S,
}

impl ModelSize {
    pub const ALL: [ModelSize; 3] = [ModelSize::L, ModelSize::M, ModelSize::S];

    /// Beam decimation factor: every beam, every 2nd, every 4th.
    pub fn downsample_factor(self) -> usize {
        match self {
            ModelSize::L => 1,
            ModelSize::M => 2,
            ModelSize::S => 4,
        }
    }

    /// 1081, 541 or 271.
    pub fn input_length(self) -> usize {
        (NUM_BEAMS - 1) / self.downsample_factor() + 1
    }
}

impl fmt::Display for ModelSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelSize::L => "L",
            ModelSize::M => "M",
            ModelSize::S => "S",
        })
    }
}

impl FromStr for ModelSize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" | "l" => Ok(ModelSize::L),
            "M" | "m" => Ok(ModelSize::M),
            "S" | "s" => Ok(ModelSize::S),
            _ => Err(format!("unknown model size {s:?} (expected L, M or S)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    TinyLidarNet,
    Mlp256,
}

impl Family {
    pub const ALL: [Family; 2] = [Family::TinyLidarNet, Family::Mlp256];

    pub fn build(self, size: ModelSize) -> NetSpec {
        match self {
            Family::TinyLidarNet => build_tinylidarnet(size),
            Family::Mlp256 => build_mlp256(size),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::TinyLidarNet => "tinylidarnet",
            Family::Mlp256 => "mlp256",
        })
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tinylidarnet" => Ok(Family::TinyLidarNet),
            "mlp256" => Ok(Family::Mlp256),
            _ => Err(format!(
                "unknown model family {s:?} (expected tinylidarnet or mlp256)"
            )),
        }
    }
}

fn conv(in_channels: usize, out_channels: usize, kernel_size: usize, stride: usize) -> LayerSpec {
    LayerSpec::Conv1d {
        in_channels,
        out_channels,
        kernel_size,
        stride,
    }
}

fn dense(in_features: usize, out_features: usize) -> LayerSpec {
    LayerSpec::Dense {
        in_features,
        out_features,
    }
}

/// Five strided convolutions and four dense layers; every layer but the
/// output head is followed by a ReLU.
pub fn build_tinylidarnet(size: ModelSize) -> NetSpec {
    use LayerSpec::{Flatten, Relu};
    let convs = [
        (1, 24, 10, 4),
        (24, 36, 8, 4),
        (36, 48, 4, 2),
        (48, 64, 3, 1),
        (64, 64, 3, 1),
    ];
    let mut len = size.input_length();
    let mut layers = Vec::new();
    for (cin, cout, k, s) in convs {
        layers.push(conv(cin, cout, k, s));
        layers.push(Relu);
        len = (len - k) / s + 1;
    }
    layers.push(Flatten);
    layers.extend([
        dense(64 * len, 100),
        Relu,
        dense(100, 50),
        Relu,
        dense(50, 10),
        Relu,
        dense(10, 2),
    ]);
    NetSpec::new(format!("tinylidarnet-{size}"), size.input_length(), layers)
}

/// Two hidden layers of 256 units.
pub fn build_mlp256(size: ModelSize) -> NetSpec {
    use LayerSpec::Relu;
    let n = size.input_length();
    NetSpec::new(
        format!("mlp256-{size}"),
        n,
        vec![dense(n, 256), Relu, dense(256, 256), Relu, dense(256, 2)],
    )
}

pub fn count_params(spec: &NetSpec) -> usize {
    spec.count_params()
}

pub fn count_macs(spec: &NetSpec) -> usize {
    spec.count_macs()
}

/// Parses names such as `tinylidarnet-M` back into (family, size).
pub fn parse_model_name(name: &str) -> Option<(Family, ModelSize)> {
    let (fam, size) = name.rsplit_once('-')?;
    Some((fam.parse().ok()?, size.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_lengths() {
        assert_eq!(ModelSize::L.input_length(), 1081);
        assert_eq!(ModelSize::M.input_length(), 541);
        assert_eq!(ModelSize::S.input_length(), 271);
    }

    #[test]
    fn tinylidarnet_has_five_conv_and_four_dense() {
        let spec = build_tinylidarnet(ModelSize::L);
        let convs = spec
            .layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::Conv1d { .. }))
            .count();
        let denses = spec
            .layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::Dense { .. }))
            .count();
        assert_eq!((convs, denses), (5, 4));
        assert_eq!(spec.output_len().unwrap(), 2);
        assert!(!spec.followed_by_relu(spec.layers.len() - 1));
    }

    #[test]
    fn table_counts() {
        let expected = [
            (Family::TinyLidarNet, ModelSize::L, 220_686, 1_546_960),
            (Family::TinyLidarNet, ModelSize::M, 111_886, 687_680),
            (Family::TinyLidarNet, ModelSize::S, 54_286, 240_752),
            (Family::Mlp256, ModelSize::L, 343_298, 342_784),
            (Family::Mlp256, ModelSize::M, 205_058, 204_544),
            (Family::Mlp256, ModelSize::S, 135_938, 135_424),
        ];
        for (fam, size, params, macs) in expected {
            let spec = fam.build(size);
            assert_eq!(count_params(&spec), params, "{}", spec.name);
            assert_eq!(count_macs(&spec), macs, "{}", spec.name);
        }
    }

    #[test]
    fn macs_monotone_in_input_length() {
        for fam in Family::ALL {
            let s = count_macs(&fam.build(ModelSize::S));
            let m = count_macs(&fam.build(ModelSize::M));
            let l = count_macs(&fam.build(ModelSize::L));
            assert!(s <= m && m <= l);
        }
    }

    #[test]
    fn names_roundtrip() {
        for fam in Family::ALL {
            for size in ModelSize::ALL {
                assert_eq!(parse_model_name(&fam.build(size).name), Some((fam, size)));
            }
        }
        assert_eq!(parse_model_name("resnet-L"), None);
    }
}
