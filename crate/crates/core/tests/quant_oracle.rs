//! Integer inference against a float simulation of the quantized arithmetic,
//! and int8 vs fp32 fidelity on trained models.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod support;

use support::float_oracle;
use tinylidar::expert::collect;
use tinylidar::nn::{init_params, train, LayerSpec, NetParams, NetSpec, Tape, TrainConfig};
use tinylidar::quant::{
    calibrate, calibration_inputs, forward_int8, forward_int8_trace, quantize, QuantizedNet,
    CALIBRATION_SAMPLES, MANTISSA_BITS,
};
use tinylidar::sim::tracks;
use tinylidar::zoo::{Family, ModelSize};

fn random_inputs(n: usize, len: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..len).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect()
}

fn quantized(spec: &NetSpec, seed: u64) -> (NetParams<f32>, QuantizedNet) {
    let p = init_params(spec, seed).unwrap();
    let reps = random_inputs(32, spec.input_length, seed + 100);
    let q = quantize(&p, &calibrate(&p, &reps).unwrap()).unwrap();
    (p, q)
}

fn small_specs() -> Vec<NetSpec> {
    use LayerSpec::{Flatten, Relu};
    let conv = |cin, cout, k, s| LayerSpec::Conv1d {
        in_channels: cin,
        out_channels: cout,
        kernel_size: k,
        stride: s,
    };
    let dense = |i, o| LayerSpec::Dense {
        in_features: i,
        out_features: o,
    };
    vec![
        NetSpec::new("d", 10, vec![dense(10, 6), Relu, dense(6, 2)]),
        NetSpec::new(
            "c",
            25,
            vec![
                conv(1, 4, 5, 2),
                Relu,
                conv(4, 3, 3, 1),
                Relu,
                Flatten,
                dense(27, 2),
            ],
        ),
        NetSpec::new("c-linear", 12, vec![conv(1, 2, 3, 3), Flatten, dense(8, 2)]),
    ]
}

#[test]
fn int8_engine_is_bit_exact_against_float_simulation() {
    let mut specs = small_specs();
    for fam in Family::ALL {
        for size in ModelSize::ALL {
            specs.push(fam.build(size));
        }
    }
    for (k, spec) in specs.iter().enumerate() {
        let (_, q) = quantized(spec, k as u64);
        // inputs beyond the calibrated range exercise saturation
        let mut xs = random_inputs(4, spec.input_length, 7 + k as u64);
        xs.push(vec![1.5; spec.input_length]);
        xs.push(vec![0.0; spec.input_length]);
        for x in xs {
            let xq = q.quantize_input(&x);
            let trace = forward_int8_trace(&q, &xq).unwrap();
            assert_eq!(trace, float_oracle(&q, &xq), "{}", spec.name);
        }
    }
}

#[test]
fn fixed_point_multiplier_approximates_real_scale() {
    for (k, spec) in small_specs().iter().enumerate() {
        let (_, q) = quantized(spec, k as u64);
        for l in &q.layers {
            let real = l.input.scale as f64 * l.weight_scale as f64 / l.output.scale as f64;
            let approx = l.mantissa as f64 / 2f64.powi((MANTISSA_BITS + l.shift) as i32);
            assert!(
                ((approx - real) / real).abs() <= 2f64.powi(-(MANTISSA_BITS as i32)),
                "{real} vs {approx}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn oracle_agrees_on_arbitrary_codes(codes in proptest::collection::vec(any::<i8>(), 25), seed in 0u64..8) {
        let (_, q) = quantized(&small_specs()[1], seed);
        prop_assert_eq!(forward_int8_trace(&q, &codes).unwrap(), float_oracle(&q, &codes));
    }
}

#[test]
fn trained_small_models_stay_within_tenth_of_fp32() {
    let oval = tracks::bundled("oval").unwrap().unwrap();
    let data = collect(&oval, 2, 3).unwrap();
    for fam in Family::ALL {
        let spec = fam.build(ModelSize::S);
        let cfg = TrainConfig {
            epochs: 2,
            seed: 3,
            ..Default::default()
        };
        let p = train(&spec, &data, &cfg).unwrap().params;
        let reps = calibration_inputs(&spec, &data, cfg.seed).unwrap();
        assert_eq!(reps.len(), CALIBRATION_SAMPLES.min(data.len()));
        let q = quantize(&p, &calibrate(&p, &reps).unwrap()).unwrap();
        let mut tape = Tape::new();
        let mut worst: f32 = 0.0;
        for x in &reps {
            let f = tape.forward(&p, x).unwrap().to_vec();
            let i = forward_int8(&q, &q.quantize_input(x)).unwrap();
            for (a, b) in f.iter().zip(&i) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst <= 0.1, "{}: max |int8 - fp32| = {worst}", spec.name);
    }
}
