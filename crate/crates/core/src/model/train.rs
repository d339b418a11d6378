use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{adam_step, clip_global_norm, AdamState};
use super::params::Parameters;
use super::transformer::{accumulate_batch, batch_loss, batch_token_count, EncodedPair, Mode};
use super::{ModelError, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Token-weighted mean of the training-mode batch losses.
    pub train_loss: f64,
    /// Eval-mode loss on the validation set, when one is given.
    pub validation_loss: Option<f64>,
}

impl EpochStats {
    /// `epoch train_loss validation_loss` on one line.
    pub fn to_line(&self) -> String {
        match self.validation_loss {
            Some(v) => format!("{} {:.6} {:.6}", self.epoch, self.train_loss, v),
            None => format!("{} {:.6} -", self.epoch, self.train_loss),
        }
    }
}

fn epoch_rng(seed: u64, epoch: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * epoch as u64 + purpose);
    rng
}

pub fn train(
    params: Parameters,
    train_set: &[EncodedPair],
    validation: &[EncodedPair],
    cfg: &TrainConfig,
) -> Result<(Parameters, Vec<EpochStats>), ModelError> {
    train_with_callback(params, train_set, validation, cfg, |_, _| {})
}

/// Same as [`train`], calling `on_epoch` after every epoch with the stats
/// and the parameters at that point.
pub fn train_with_callback(
    mut params: Parameters,
    train_set: &[EncodedPair],
    validation: &[EncodedPair],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats, &Parameters),
) -> Result<(Parameters, Vec<EpochStats>), ModelError> {
    cfg.validate()?;
    params.config.validate()?;
    if train_set.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let mut state = AdamState::new(&params);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut epoch_rng(cfg.seed, epoch, 0));
        let mut dropout_rng = epoch_rng(cfg.seed, epoch, 1);
        let mut weighted = 0.0;
        let mut tokens = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<EncodedPair> = chunk.iter().map(|&i| train_set[i].clone()).collect();
            let n_tokens = batch_token_count(&batch);
            let mut grads = Parameters::zeros(&params.config);
            let loss = accumulate_batch(&params, &batch, &mut Mode::Train(&mut dropout_rng), &mut grads)?;
            if let Some(max_norm) = cfg.clip_norm {
                clip_global_norm(&mut grads, max_norm);
            }
            adam_step(&mut params, &grads, &mut state, cfg);
            weighted += loss * n_tokens as f64;
            tokens += n_tokens;
        }
        let validation_loss = if validation.is_empty() {
            None
        } else {
            Some(batch_loss(&params, validation)?)
        };
        let stats = EpochStats {
            epoch: epoch + 1,
            train_loss: weighted / tokens as f64,
            validation_loss,
        };
        on_epoch(&stats, &params);
        history.push(stats);
    }
    Ok((params, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn toy_data() -> Vec<EncodedPair> {
        (0..6)
            .map(|i| EncodedPair {
                src: vec![4 + i % 4, 5, 6 + i % 3],
                tgt: vec![4 + i % 4, 7],
            })
            .collect()
    }

    #[test]
    fn zero_epochs_is_identity() {
        let cfg = ModelConfig::tiny(12);
        let p = Parameters::init(&cfg, 2);
        let tc = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (out, history) = train(p.clone(), &toy_data(), &[], &tc).unwrap();
        assert_eq!(out, p);
        assert!(history.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_learns() {
        let mut cfg = ModelConfig::tiny(12);
        cfg.dropout = 0.1;
        let tc = TrainConfig {
            epochs: 30,
            batch_size: 4,
            learning_rate: 1e-2,
            seed: 9,
            ..TrainConfig::default()
        };
        let run = || train(Parameters::init(&cfg, 2), &toy_data(), &toy_data()[..2], &tc).unwrap();
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert!(ha.last().unwrap().train_loss < ha[0].train_loss);
        assert!(ha.iter().all(|s| s.validation_loss.is_some()));
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let cfg = ModelConfig::tiny(12);
        assert!(matches!(
            train(Parameters::init(&cfg, 2), &[], &[], &TrainConfig::default()),
            Err(ModelError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn callback_sees_every_epoch() {
        let cfg = ModelConfig::tiny(12);
        let tc = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        let mut seen = Vec::new();
        let (_, history) = train_with_callback(Parameters::init(&cfg, 2), &toy_data(), &[], &tc, |s, _| {
            seen.push(s.epoch)
        })
        .unwrap();
        assert_eq!(seen, vec![1, 2, 3]);
        assert_eq!(history.len(), 3);
        assert!(history[0].to_line().ends_with(" -"));
    }
}
