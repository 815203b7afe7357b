use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::NetParams;
use super::spec::NetSpec;
use super::tensor::Tensor;
use super::NnError;

/// Seeded initialization: He-uniform for layers followed by a ReLU,
/// Xavier-uniform otherwise. Biases start at zero.
pub fn init_params(spec: &NetSpec, seed: u64) -> Result<NetParams<f32>, NnError> {
    spec.shapes()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = Vec::new();
    for (idx, layer) in spec.learnable() {
        let shape = layer.weight_shape().expect("learnable");
        let fan_in = layer.fan_in() as f64;
        let fan_out = match shape[0] {
            o if shape.len() == 3 => (o * shape[2]) as f64,
            o => o as f64,
        };
        let limit = if spec.followed_by_relu(idx) {
            (6.0 / fan_in).sqrt()
        } else {
            (6.0 / (fan_in + fan_out)).sqrt()
        };
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| rng.gen_range(-limit..limit) as f32)
            .collect();
        tensors.push(Tensor::from_vec(&shape, data).expect("shape"));
        tensors.push(Tensor::zeros(&[layer.bias_len().expect("learnable")]));
    }
    NetParams::from_tensors(spec.clone(), tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{build_tinylidarnet, ModelSize};

    #[test]
    fn seeded_init_is_reproducible() {
        let spec = build_tinylidarnet(ModelSize::S);
        assert_eq!(
            init_params(&spec, 9).unwrap(),
            init_params(&spec, 9).unwrap()
        );
        assert_ne!(
            init_params(&spec, 9).unwrap(),
            init_params(&spec, 10).unwrap()
        );
    }

    #[test]
    fn he_limit_respected() {
        let spec = build_tinylidarnet(ModelSize::S);
        let p = init_params(&spec, 1).unwrap();
        let limit = (6.0f32 / 10.0).sqrt();
        assert!(p.tensors()[0].data().iter().all(|w| w.abs() <= limit));
        assert!(p.tensors()[1].data().iter().all(|b| *b == 0.0));
    }
}
