//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tinylidar::nn::{huber_loss, init_params, LayerSpec, NetParams, NetSpec, Tape};
use tinylidar::quant::{QLayerKind, QuantizedNet, MANTISSA_BITS};
use tinylidar::sim::OccupancyGrid;

// ---- gradients -------------------------------------------------------------

pub const GRAD_H: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;

pub fn conv(cin: usize, cout: usize, k: usize, s: usize) -> LayerSpec {
    LayerSpec::Conv1d {
        in_channels: cin,
        out_channels: cout,
        kernel_size: k,
        stride: s,
    }
}

pub fn dense(i: usize, o: usize) -> LayerSpec {
    LayerSpec::Dense {
        in_features: i,
        out_features: o,
    }
}

/// Small nets covering every layer kind, stride and ReLU placement.
pub fn gradcheck_nets() -> Vec<NetSpec> {
    use LayerSpec::{Flatten, Relu};
    vec![
        NetSpec::new("dense", 7, vec![dense(7, 5), Relu, dense(5, 2)]),
        NetSpec::new("dense-linear", 4, vec![dense(4, 3), dense(3, 2)]),
        NetSpec::new(
            "conv",
            13,
            vec![conv(1, 3, 3, 1), Relu, Flatten, dense(33, 2)],
        ),
        NetSpec::new(
            "conv-strided",
            21,
            vec![
                conv(1, 4, 5, 2),
                Relu,
                conv(4, 3, 3, 2),
                Relu,
                Flatten,
                dense(12, 4),
                Relu,
                dense(4, 2),
            ],
        ),
        NetSpec::new(
            "conv-no-relu",
            9,
            vec![conv(1, 2, 2, 3), Flatten, dense(6, 2)],
        ),
    ]
}

/// Randomizes parameters so biases are non-zero and ReLUs see both signs.
pub fn random_params(spec: &NetSpec, seed: u64) -> NetParams<f64> {
    let mut p = init_params(spec, seed).unwrap().cast::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    for t in p.tensors_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    p
}

fn huber_of(p: &NetParams<f64>, x: &[f64], target: &[f64]) -> f64 {
    let mut tape = Tape::new();
    let y = tape.forward(p, x).unwrap().to_vec();
    huber_loss(&y, target, 0.5).unwrap().0
}

fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-9 {
        0.0
    } else {
        (a - n).abs() / scale
    }
}

/// Worst relative error between backprop and central differences of a Huber
/// loss over every parameter, for one random input and target.
pub fn gradcheck_worst(spec: &NetSpec, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let p = random_params(spec, seed);
    let x: Vec<f64> = (0..spec.input_length)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let target: Vec<f64> = (0..spec.output_len().unwrap())
        .map(|_| rng.gen_range(-2.0..2.0))
        .collect();

    let mut tape = Tape::new();
    let y = tape.forward(&p, &x).unwrap().to_vec();
    let (_, dy) = huber_loss(&y, &target, 0.5).unwrap();
    let grads = tape.backward(&p, &dy).unwrap();

    let mut worst: f64 = 0.0;
    for (ti, g) in grads.tensors.iter().enumerate() {
        for (vi, &analytic) in g.data().iter().enumerate() {
            let mut plus = p.clone();
            plus.tensors_mut()[ti].data_mut()[vi] += GRAD_H;
            let mut minus = p.clone();
            minus.tensors_mut()[ti].data_mut()[vi] -= GRAD_H;
            let numeric =
                (huber_of(&plus, &x, &target) - huber_of(&minus, &x, &target)) / (2.0 * GRAD_H);
            worst = worst.max(rel_err(analytic, numeric));
        }
    }
    worst
}

// ---- raycasting ------------------------------------------------------------

pub fn march_step(grid: &OccupancyGrid) -> f64 {
    grid.resolution / 200.0
}

/// Walks the ray in fixed small steps and reports the first occupied sample.
pub fn march(grid: &OccupancyGrid, x: f64, y: f64, theta: f64, max_range: f64) -> f64 {
    let step = march_step(grid);
    let (dx, dy) = (theta.cos(), theta.sin());
    let mut d = 0.0;
    while d < max_range {
        if grid.occupied_at(x + d * dx, y + d * dy) {
            return d;
        }
        d += step;
    }
    max_range
}

/// Exact brute force: slab intersection of the ray with every occupied cell.
/// Returns the nearest entry distance and the chord length through that cell.
pub fn slab(grid: &OccupancyGrid, x: f64, y: f64, theta: f64, max_range: f64) -> (f64, f64) {
    let (dx, dy) = (theta.cos(), theta.sin());
    let mut best = (max_range, f64::INFINITY);
    for cy in 0..grid.height {
        for cx in 0..grid.width {
            if !grid.is_occupied(cx as i64, cy as i64) {
                continue;
            }
            let lo = [
                grid.origin[0] + cx as f64 * grid.resolution,
                grid.origin[1] + cy as f64 * grid.resolution,
            ];
            let hi = [lo[0] + grid.resolution, lo[1] + grid.resolution];
            let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
            for (p, d, l, h) in [(x, dx, lo[0], hi[0]), (y, dy, lo[1], hi[1])] {
                if d == 0.0 {
                    if p < l || p >= h {
                        t1 = -1.0;
                    }
                } else {
                    let (a, b) = ((l - p) / d, (h - p) / d);
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
            }
            if t0 < t1 && t0 < best.0 {
                best = (t0, t1 - t0);
            }
        }
    }
    best
}

pub fn random_map(rng: &mut ChaCha8Rng) -> OccupancyGrid {
    let w = rng.gen_range(20..80);
    let h = rng.gen_range(20..80);
    let res = [0.05, 0.1, 0.2][rng.gen_range(0..3)];
    let origin = [rng.gen_range(-3.0..0.0), rng.gen_range(-3.0..0.0)];
    let mut g = OccupancyGrid::new(w, h, res, origin).unwrap();
    let density = rng.gen_range(0.02..0.2);
    for cy in 0..h {
        for cx in 0..w {
            if rng.gen_bool(density) {
                g.set(cx, cy, true);
            }
        }
    }
    g
}

/// 10 m x 10 m interior spanning [0, 10]^2 with one-cell walls.
pub fn room(res: f64) -> OccupancyGrid {
    let n = (10.0 / res).round() as usize + 2;
    let mut g = OccupancyGrid::new(n, n, res, [-res, -res]).unwrap();
    for i in 0..n {
        g.set(i, 0, true);
        g.set(i, n - 1, true);
        g.set(0, i, true);
        g.set(n - 1, i, true);
    }
    g
}

// ---- quantized inference ---------------------------------------------------

/// Evaluates every layer in f64: accumulators are integer-valued sums of
/// products of int8 codes, rescaled by `mantissa / 2^(21 + shift)`, rounded
/// half away from zero and clamped.
pub fn float_oracle(q: &QuantizedNet, x: &[i8]) -> Vec<Vec<i8>> {
    let mut acts = vec![x.to_vec()];
    for l in &q.layers {
        let input = acts.last().unwrap();
        let zp = l.input.zero_point as f64;
        let xin: Vec<f64> = input.iter().map(|v| *v as f64 - zp).collect();
        let m = l.mantissa as f64 / 2f64.powi((MANTISSA_BITS + l.shift) as i32);
        let lo = if l.relu {
            l.output.zero_point as f64
        } else {
            -128.0
        };
        let requant = |acc: f64| -> i8 {
            (l.output.zero_point as f64 + (acc * m).round()).clamp(lo, 127.0) as i8
        };
        let mut out = Vec::new();
        match l.kind {
            QLayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
                in_len,
                out_len,
            } => {
                for co in 0..out_channels {
                    for t in 0..out_len {
                        let mut acc = l.bias[co] as f64;
                        for ci in 0..in_channels {
                            for j in 0..kernel_size {
                                let w = l.weights[(co * in_channels + ci) * kernel_size + j] as f64;
                                acc += w * xin[ci * in_len + t * stride + j];
                            }
                        }
                        out.push(requant(acc));
                    }
                }
            }
            QLayerKind::Dense {
                in_features,
                out_features,
            } => {
                for o in 0..out_features {
                    let mut acc = l.bias[o] as f64;
                    for i in 0..in_features {
                        acc += l.weights[o * in_features + i] as f64 * xin[i];
                    }
                    out.push(requant(acc));
                }
            }
        }
        acts.push(out);
    }
    acts
}

// ---- cross-platform int8 digest --------------------------------------------

/// Checked-in int8 checkpoint (tinylidarnet-S) used for the golden digest.
pub const INT8_FIXTURE: &[u8] = include_bytes!("../fixtures/tinylidarnet-S.q8");

/// SHA-256 over every layer's int8 codes for 32 integer-generated inputs.
/// Depends on integer arithmetic only, so it must be identical on every platform.
pub const INT8_GOLDEN: &str = "773024f0af6b31f1b288d64f01df0ae6662193b1ca651b2f50c81e794b85b062";

pub fn int8_digest(q: &QuantizedNet) -> String {
    use rand::RngCore;
    use sha2::{Digest, Sha256};
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut h = Sha256::new();
    for _ in 0..32 {
        let x: Vec<i8> = (0..q.input_length())
            .map(|_| rng.next_u32() as u8 as i8)
            .collect();
        for layer in tinylidar::quant::forward_int8_trace(q, &x).unwrap() {
            h.update(layer.iter().map(|v| *v as u8).collect::<Vec<u8>>());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
