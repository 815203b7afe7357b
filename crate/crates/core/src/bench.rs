//! Single-threaded inference latency and model footprint.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::policy::{Model, ModelError};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub iters: usize,
    pub warmup: usize,
    /// Seed of the fixed random input.
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            iters: 10_000,
            warmup: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub model: String,
    pub format: &'static str,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
    /// Serialized checkpoint size.
    pub bytes: usize,
    pub params: usize,
    pub macs: usize,
}

impl BenchResult {
    pub fn csv_header() -> &'static str {
        "model,format,mean_us,p50_us,p99_us,bytes,params,macs\n"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.3},{:.3},{:.3},{},{},{}\n",
            self.model,
            self.format,
            self.mean_us,
            self.p50_us,
            self.p99_us,
            self.bytes,
            self.params,
            self.macs
        )
    }
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Times `iters` inferences on one fixed random input after `warmup` untimed ones.
pub fn bench_latency(model: &Model, cfg: &BenchConfig) -> Result<BenchResult, ModelError> {
    let spec = model.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let input: Vec<f32> = (0..spec.input_length)
        .map(|_| rng.gen_range(0.0..1.0))
        .collect();
    let mut runner = model.runner()?;
    for _ in 0..cfg.warmup {
        std::hint::black_box(runner.infer(std::hint::black_box(&input))?);
    }
    let mut samples = Vec::with_capacity(cfg.iters);
    for _ in 0..cfg.iters {
        let t = Instant::now();
        std::hint::black_box(runner.infer(std::hint::black_box(&input))?);
        samples.push(t.elapsed().as_secs_f64() * 1e6);
    }
    let mean_us = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
    samples.sort_by(f64::total_cmp);
    Ok(BenchResult {
        model: spec.name.clone(),
        format: model.format_name(),
        mean_us,
        p50_us: percentile(&samples, 50.0),
        p99_us: percentile(&samples, 99.0),
        bytes: model.encode().len(),
        params: spec.count_params(),
        macs: spec.count_macs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_params;
    use crate::zoo::{build_mlp256, ModelSize};

    #[test]
    fn percentiles() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 50.0), 50.0);
        assert_eq!(percentile(&v, 99.0), 99.0);
        assert_eq!(percentile(&v, 100.0), 100.0);
        assert_eq!(percentile(&[3.0], 50.0), 3.0);
        assert!(percentile(&[], 50.0).is_nan());
    }

    #[test]
    fn reports_counts_and_ordered_stats() {
        let m = Model::Float(init_params(&build_mlp256(ModelSize::S), 0).unwrap());
        let r = bench_latency(
            &m,
            &BenchConfig {
                iters: 200,
                warmup: 5,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(r.params, 135_938);
        assert_eq!(r.macs, 135_424);
        assert_eq!(r.bytes, m.encode().len());
        assert!(r.p50_us <= r.p99_us && r.mean_us > 0.0);
        assert!(r.csv_row().starts_with("mlp256-S,fp32,"));
    }
}
