use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::init::init_params;
use super::loss::huber_loss;
use super::network::{NetParams, Tape};
use super::spec::NetSpec;
use super::NnError;
use crate::dataset::Dataset;
use crate::scan::downsample_factor_for;

/// Training hyperparameters. Defaults follow the published recipe.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f32,
    /// Fraction of samples held out for validation.
    pub val_fraction: f64,
    pub huber_delta: f32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 20,
            lr: 5e-5,
            val_fraction: 0.15,
            huber_delta: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean Huber loss over the epoch's training batches.
    pub train: f32,
    /// Mean Huber loss on the held-out split after the epoch, if it is non-empty.
    pub val: Option<f32>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: NetParams<f32>,
    pub initial_train_loss: f32,
    pub initial_val_loss: Option<f32>,
    pub history: Vec<EpochLoss>,
}

/// Deterministic train/validation split: shuffle indices with `seed`, the
/// first `1 - val_fraction` go to training.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (((1.0 - val_fraction) * n as f64).round() as usize).clamp(n.min(1), n);
    let val = idx.split_off(n_train);
    (idx, val)
}

/// Model inputs for every sample, downsampled to the spec's input length.
pub(crate) fn model_inputs(spec: &NetSpec, data: &Dataset) -> Result<Vec<Vec<f32>>, NnError> {
    let factor = downsample_factor_for(spec.input_length).ok_or_else(|| {
        NnError::InvalidArgument(format!(
            "no downsampling factor maps a scan to input length {}",
            spec.input_length
        ))
    })?;
    data.samples
        .iter()
        .map(|s| {
            crate::scan::downsample(&s.scan, factor)
                .map_err(|e| NnError::InvalidArgument(format!("dataset sample: {e}")))
        })
        .collect()
}

/// Mean per-sample Huber loss over `indices`.
pub fn mean_loss(
    params: &NetParams<f32>,
    inputs: &[Vec<f32>],
    labels: &[[f32; 2]],
    indices: &[usize],
    delta: f32,
) -> Result<f32, NnError> {
    let mut tape = Tape::new();
    let mut total = 0.0f64;
    for &i in indices {
        let out = tape.forward(params, &inputs[i])?;
        let (l, _) = huber_loss(out, &labels[i], delta)?;
        total += l as f64;
    }
    Ok((total / indices.len().max(1) as f64) as f32)
}

/// Behavior-cloning training loop: Adam on the batch-averaged Huber loss.
///
/// Single-threaded; the loss history is bitwise reproducible for a fixed seed.
pub fn train(spec: &NetSpec, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, NnError> {
    if data.samples.is_empty() {
        return Err(NnError::InvalidArgument("empty dataset".into()));
    }
    if cfg.batch_size == 0 {
        return Err(NnError::InvalidArgument(
            "batch size must be positive".into(),
        ));
    }
    let inputs = model_inputs(spec, data)?;
    let labels: Vec<[f32; 2]> = data.samples.iter().map(|s| s.label).collect();

    let (mut train_idx, val_idx) = split_indices(inputs.len(), cfg.val_fraction, cfg.seed);
    let mut params = init_params(spec, cfg.seed)?;
    let mut adam = AdamState::new(&params, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_ba7c4);

    let initial_train_loss = mean_loss(&params, &inputs, &labels, &train_idx, cfg.huber_delta)?;
    let initial_val_loss = if val_idx.is_empty() {
        None
    } else {
        Some(mean_loss(
            &params,
            &inputs,
            &labels,
            &val_idx,
            cfg.huber_delta,
        )?)
    };

    let mut tape = Tape::new();
    let mut grads = params.zero_grads();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        let mut batches = 0usize;
        for batch in train_idx.chunks(cfg.batch_size) {
            grads.fill_zero();
            let inv = 1.0 / batch.len() as f32;
            let mut batch_loss = 0.0f64;
            for &i in batch {
                let out = tape.forward(&params, &inputs[i])?;
                let (l, mut g) = huber_loss(out, &labels[i], cfg.huber_delta)?;
                batch_loss += l as f64;
                g.iter_mut().for_each(|v| *v *= inv);
                tape.backward_into(&params, &g, &mut grads)?;
            }
            adam.step(&mut params, &grads)?;
            epoch_loss += batch_loss / batch.len() as f64;
            batches += 1;
        }
        if !params.tensors().iter().all(|t| t.all_finite()) {
            return Err(NnError::NonFinite("parameters diverged"));
        }
        let val = if val_idx.is_empty() {
            None
        } else {
            Some(mean_loss(
                &params,
                &inputs,
                &labels,
                &val_idx,
                cfg.huber_delta,
            )?)
        };
        history.push(EpochLoss {
            epoch: epoch + 1,
            train: (epoch_loss / batches.max(1) as f64) as f32,
            val,
        });
    }
    Ok(TrainOutcome {
        params,
        initial_train_loss,
        initial_val_loss,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_85_15_and_disjoint() {
        let (tr, va) = split_indices(12_329, 0.15, 4);
        assert_eq!(tr.len(), 10_480);
        assert_eq!(tr.len() + va.len(), 12_329);
        let mut all: Vec<usize> = tr.iter().chain(&va).copied().collect();
        all.sort_unstable();
        assert!(all.iter().enumerate().all(|(i, v)| i == *v));
    }

    #[test]
    fn split_is_seeded() {
        assert_eq!(split_indices(100, 0.15, 1), split_indices(100, 0.15, 1));
        assert_ne!(split_indices(100, 0.15, 1), split_indices(100, 0.15, 2));
    }

    #[test]
    fn empty_dataset_rejected() {
        let spec = crate::zoo::build_mlp256(crate::zoo::ModelSize::S);
        let data = Dataset::new("none", 0);
        assert!(train(&spec, &data, &TrainConfig::default()).is_err());
    }
}
