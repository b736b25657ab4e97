//! Minibatch Adam training of a value network on a dataset file.
//!
//! Deterministic for a fixed config: the shuffle runs off one seeded
//! stream, and batch gradients are reduced over fixed-size chunks in
//! chunk order, so the result is independent of the worker count.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::datagen::{read_dataset, DataError, TrainingSample};
use crate::mix_seed;
use crate::neural::{
    accumulate_loss_and_gradients, batch_loss, io, AdamConfig, AdamState, Architecture,
    NeuralError, ValueNet,
};

/// Fixed gradient-reduction chunk; changing it changes rounding, so it
/// is part of the determinism contract.
const GRAD_CHUNK: usize = 32;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset does not fit the network: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Fraction of the dataset (taken from the end, pre-shuffle order)
    /// held out for validation; in [0, 0.5].
    pub validation_fraction: f64,
    pub shuffle_seed: u64,
    pub arch: Architecture,
}

impl TrainConfig {
    pub fn new(arch: Architecture) -> TrainConfig {
        TrainConfig {
            epochs: 16,
            batch_size: 128,
            lr: 1e-3,
            validation_fraction: 0.05,
            shuffle_seed: 0,
            arch,
        }
    }

    fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::ShapeMismatch(
                "epochs and batch_size must be >= 1".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return Err(TrainError::ShapeMismatch(
                "validation_fraction must be in [0, 0.5]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub final_train_loss: f64,
    /// None when validation_fraction cut off zero samples.
    pub final_val_loss: Option<f64>,
    /// Mean squared error observed during each epoch.
    pub epoch_losses: Vec<f64>,
    pub train_samples: usize,
    pub val_samples: usize,
}

fn check_fit(arch: &Architecture, tiles: usize, features: usize) -> Result<(), TrainError> {
    let ok = match arch {
        Architecture::Attention(cfg) => cfg.max_tiles >= tiles && cfg.feature_dim == features,
        Architecture::Conv(cfg) => cfg.grid.0 * cfg.grid.1 == tiles && cfg.feature_dim == features,
    };
    if ok {
        Ok(())
    } else {
        Err(TrainError::ShapeMismatch(format!(
            "dataset is {tiles} tiles x {features} features"
        )))
    }
}

/// Trains on already-loaded samples, returning the net and the loss
/// trajectory.
pub fn train_from_samples(
    samples: &[TrainingSample<f32>],
    config: &TrainConfig,
) -> Result<(ValueNet<f32>, TrainReport), TrainError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    check_fit(
        &config.arch,
        samples[0].encoding.tiles(),
        samples[0].encoding.features(),
    )?;

    let n_val = (config.validation_fraction * samples.len() as f64).floor() as usize;
    let (train, val) = samples.split_at(samples.len() - n_val);
    if train.is_empty() {
        return Err(TrainError::EmptyDataset);
    }

    let mut net: ValueNet<f32> = ValueNet::new(
        config.arch.clone(),
        mix_seed(config.shuffle_seed, 0x696e_6974),
    )?;
    let mut adam = AdamState::new(net.params());
    let adam_cfg = AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.shuffle_seed, 0x7368_7566));

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut batch: Vec<&TrainingSample<f32>> = Vec::with_capacity(config.batch_size);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sq_sum = 0.0f64;
        for index_chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(index_chunk.iter().map(|&i| &train[i]));
            let scale = 1.0f32 / batch.len() as f32;
            // Per-chunk partial gradients, reduced in chunk order so the
            // result does not depend on the worker count.
            let partials: Vec<(crate::neural::ParamSet<f32>, f64)> = batch
                .par_chunks(GRAD_CHUNK)
                .map(|chunk| {
                    let mut ws = net.workspace();
                    let mut grads = net.params().zeros_like();
                    let sq = accumulate_loss_and_gradients(
                        &net,
                        chunk.iter().copied(),
                        &mut ws,
                        &mut grads,
                        scale,
                    )
                    .expect("shapes checked");
                    (grads, sq as f64)
                })
                .collect();
            let mut grads = net.params().zeros_like();
            for (partial, sq) in partials {
                grads.add_assign(&partial);
                sq_sum += sq;
            }
            adam.step(&adam_cfg, net.params_mut(), &grads)?;
        }
        epoch_losses.push(sq_sum / train.len() as f64);
    }

    let mut ws = net.workspace();
    let final_train_loss = batch_loss(&net, train, &mut ws)? as f64;
    let final_val_loss = if val.is_empty() {
        None
    } else {
        Some(batch_loss(&net, val, &mut ws)? as f64)
    };
    Ok((
        net,
        TrainReport {
            final_train_loss,
            final_val_loss,
            epoch_losses,
            train_samples: train.len(),
            val_samples: val.len(),
        },
    ))
}

/// Loads a dataset file, trains, writes the model file, and reports the
/// final train/validation losses.
pub fn train_model(
    dataset_path: &Path,
    config: &TrainConfig,
    model_out: &Path,
) -> Result<TrainReport, TrainError> {
    let (_, samples) = read_dataset(dataset_path)?;
    let (net, report) = train_from_samples(&samples, config)?;
    io::save_model(&net, model_out)?;
    Ok(report)
}
