use super::QuantError;
use crate::dataset::Dataset;
use crate::nn::{split_indices, NetParams, NetSpec, Tape, TrainConfig};
use crate::scan::{downsample, downsample_factor_for};

/// Width substituted for calibrated ranges that collapse to a point.
pub const DEGENERATE_RANGE: f32 = 1e-6;
/// Size of the representative set used for calibration.
pub const CALIBRATION_SAMPLES: usize = 256;

/// The first [`CALIBRATION_SAMPLES`] training-split samples for `seed`, in
/// split order, downsampled to the model input. Uses the same split as
/// training with the default validation fraction.
pub fn calibration_inputs(
    spec: &NetSpec,
    data: &Dataset,
    seed: u64,
) -> Result<Vec<Vec<f32>>, QuantError> {
    let len = spec.input_length;
    let factor = downsample_factor_for(len).ok_or(QuantError::InputLength {
        expected: crate::scan::NUM_BEAMS,
        got: len,
    })?;
    let (train, _) = split_indices(data.len(), TrainConfig::default().val_fraction, seed);
    train
        .iter()
        .take(CALIBRATION_SAMPLES)
        .map(|&i| {
            downsample(&data.samples[i].scan, factor)
                .map_err(|e| QuantError::Network(e.to_string()))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub min: f32,
    pub max: f32,
}

impl Range {
    pub const EMPTY: Range = Range {
        min: f32::INFINITY,
        max: f32::NEG_INFINITY,
    };

    pub fn observe(&mut self, values: &[f32]) {
        for &v in values {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
    }

    pub fn merge(&self, other: &Range) -> Range {
        Range {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn contains(&self, other: &Range) -> bool {
        self.min <= other.min && self.max >= other.max
    }

    fn widened(self) -> Range {
        if self.max - self.min < DEGENERATE_RANGE {
            Range {
                min: self.min,
                max: self.min + DEGENERATE_RANGE,
            }
        } else {
            self
        }
    }
}

/// Observed activation ranges: the network input, then the (post-ReLU)
/// output of every learnable layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub input: Range,
    pub layers: Vec<Range>,
}

impl Calibration {
    pub fn merge(&self, other: &Calibration) -> Calibration {
        Calibration {
            input: self.input.merge(&other.input),
            layers: self
                .layers
                .iter()
                .zip(&other.layers)
                .map(|(a, b)| a.merge(b))
                .collect(),
        }
    }
}

/// Runs the fp32 network over `rep_data` (model-length inputs) and records
/// running min/max of every activation that the int8 path quantizes.
pub fn calibrate(
    params: &NetParams<f32>,
    rep_data: &[Vec<f32>],
) -> Result<Calibration, QuantError> {
    if rep_data.is_empty() {
        return Err(QuantError::EmptyCalibration);
    }
    let spec = params.spec();
    // activation index holding each learnable layer's quantized output
    let taps: Vec<usize> = spec
        .learnable()
        .map(|(i, _)| {
            if spec.followed_by_relu(i) {
                i + 2
            } else {
                i + 1
            }
        })
        .collect();
    let mut input = Range::EMPTY;
    let mut layers = vec![Range::EMPTY; taps.len()];
    let mut tape = Tape::new();
    for x in rep_data {
        tape.forward(params, x)
            .map_err(|e| QuantError::Network(e.to_string()))?;
        input.observe(x);
        for (r, &t) in layers.iter_mut().zip(&taps) {
            r.observe(tape.activation(t));
        }
    }
    Ok(Calibration {
        input: input.widened(),
        layers: layers.into_iter().map(Range::widened).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_params;
    use crate::zoo::{build_tinylidarnet, ModelSize};

    fn inputs(n: usize, len: usize, seed: u64) -> Vec<Vec<f32>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..len).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn empty_set_rejected() {
        let p = NetParams::<f32>::zeros(build_tinylidarnet(ModelSize::S)).unwrap();
        assert_eq!(calibrate(&p, &[]), Err(QuantError::EmptyCalibration));
    }

    #[test]
    fn zero_network_ranges_are_widened() {
        let p = NetParams::<f32>::zeros(build_tinylidarnet(ModelSize::S)).unwrap();
        let c = calibrate(&p, &inputs(4, 271, 1)).unwrap();
        for r in &c.layers {
            assert_eq!(r.min, 0.0);
            assert_eq!(r.max, DEGENERATE_RANGE);
        }
    }

    #[test]
    fn relu_outputs_nonnegative_and_superset_monotone() {
        let spec = build_tinylidarnet(ModelSize::S);
        let p = init_params(&spec, 2).unwrap();
        let data = inputs(40, 271, 3);
        let small = calibrate(&p, &data[..10]).unwrap();
        let big = calibrate(&p, &data).unwrap();
        let n = big.layers.len();
        for r in &big.layers[..n - 1] {
            assert!(r.min >= 0.0);
        }
        assert!(big.input.contains(&small.input));
        for (b, s) in big.layers.iter().zip(&small.layers) {
            assert!(b.contains(s));
        }
        assert_eq!(small.merge(&big), big);
    }
}
