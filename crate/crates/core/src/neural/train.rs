//! Plain SGD training with teacher forcing, validation-based early
//! stopping, and deterministic shuffling and dropout.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{bind, example_loss, Mode};
use super::params::{init_params, ModelConfig, ModelParams};
use super::tape::Tape;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::textprep::PreparedExample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Early-stopping bookkeeping: the best validation loss wins, and
/// `patience` consecutive non-improving epochs stop the run.
#[derive(Debug)]
pub(crate) struct EarlyStop {
    best: f64,
    pub best_epoch: usize,
    bad: usize,
    patience: usize,
}

impl EarlyStop {
    pub fn new(patience: usize) -> Self {
        EarlyStop {
            best: f64::INFINITY,
            best_epoch: 0,
            bad: 0,
            patience,
        }
    }

    /// Returns (improved, should_stop).
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, bool) {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.bad = 0;
            (true, false)
        } else {
            self.bad += 1;
            (false, self.bad >= self.patience)
        }
    }
}

/// Mean teacher-forced loss over a set, dropout off.
pub fn evaluate_loss(params: &ModelParams, set: &[PreparedExample]) -> f64 {
    let mut total = 0.0;
    for example in set {
        let mut tape = Tape::new();
        let model = bind(&mut tape, params);
        let loss = example_loss(&mut tape, &model, example, &mut Mode::Eval);
        total += tape.value(loss).at(0);
    }
    total / set.len() as f64
}

/// Trains from a fresh seeded initialization and returns the parameters
/// of the best validation epoch plus the loss history.
pub fn train(
    config: &ModelConfig,
    train_set: &[PreparedExample],
    val_set: &[PreparedExample],
) -> Result<(ModelParams, TrainHistory)> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config("training and validation sets must be non-empty".into()));
    }
    let mut params = init_params(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5EED_0001));

    let mut grad_accum: Vec<Tensor> = params
        .visit()
        .iter()
        .map(|(_, t)| Tensor::zeros(t.rows(), t.cols()))
        .collect();

    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut stopper = EarlyStop::new(config.patience);
    let mut best_params = params.clone();

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;

        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            for g in &mut grad_accum {
                g.data_mut().fill(0.0);
            }
            for &idx in batch {
                let example = &train_set[idx];
                let mut tape = Tape::new();
                let model = bind(&mut tape, &params);
                let loss = example_loss(
                    &mut tape,
                    &model,
                    example,
                    &mut Mode::Train {
                        dropout: config.dropout,
                        rng: &mut rng,
                    },
                );
                let loss_value = tape.value(loss).at(0);
                if !loss_value.is_finite() {
                    return Err(Error::Train {
                        epoch,
                        batch: batch_no,
                        message: format!("non-finite loss on example {}", example.id),
                    });
                }
                epoch_loss += loss_value;
                let grads = tape.backward(loss);
                for (accum, &node) in grad_accum.iter_mut().zip(&model.param_nodes) {
                    if let Some(g) = grads.get_ref(node) {
                        for (a, v) in accum.data_mut().iter_mut().zip(g.data()) {
                            *a += v;
                        }
                    }
                }
            }
            apply_sgd(&mut params, &grad_accum, config, batch.len());
        }

        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = evaluate_loss(&params, val_set);
        history.epochs.push(EpochStats {
            train_loss,
            val_loss,
        });

        let (improved, stop) = stopper.observe(epoch, val_loss);
        if improved {
            best_params = params.clone();
        }
        if stop {
            history.stopped_early = true;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch;
    Ok((best_params, history))
}

fn apply_sgd(params: &mut ModelParams, grad_accum: &[Tensor], config: &ModelConfig, batch_len: usize) {
    let scale = 1.0 / batch_len as f64;
    let clip_factor = if config.clip_norm > 0.0 {
        let norm = (grad_accum
            .iter()
            .map(|g| g.squared_norm())
            .sum::<f64>()
            .sqrt())
            * scale;
        if norm > config.clip_norm {
            config.clip_norm / norm
        } else {
            1.0
        }
    } else {
        1.0
    };
    let step = config.lr * scale * clip_factor;
    for ((_, tensor), grad) in params.visit_mut().into_iter().zip(grad_accum) {
        for (p, g) in tensor.data_mut().iter_mut().zip(grad.data()) {
            *p -= step * g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::params::CellKind;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            src_vocab_size: 16,
            tgt_vocab_size: 12,
            embed_dim: 4,
            hidden_dim: 6,
            cell: CellKind::Gru,
            dropout: 0.1,
            lr: 0.5,
            batch_size: 2,
            max_epochs: 4,
            patience: 3,
            seed: 13,
            ..ModelConfig::default()
        }
    }

    fn toy_set() -> Vec<PreparedExample> {
        (0..4)
            .map(|i| PreparedExample {
                id: format!("e{i}"),
                code_ids: vec![4 + i, 5, 6],
                ast_ids: vec![7, 8 + i],
                desc_channels: vec![vec![1, 9, 2]],
                def_channels: vec![vec![1, 10 + i, 2]],
                target_ids: vec![1, 4 + i, 5, 2],
            })
            .collect()
    }

    #[test]
    fn early_stop_follows_the_patience_rule() {
        // best at epoch 3, strictly worsening after: stop at epoch 10
        let mut stopper = EarlyStop::new(7);
        let losses = [5.0, 4.0, 1.0, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0, 2.1, 2.2];
        let mut stopped_at = None;
        for (i, &loss) in losses.iter().enumerate() {
            let epoch = i + 1;
            let (_, stop) = stopper.observe(epoch, loss);
            if stop {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(10));
        assert_eq!(stopper.best_epoch, 3);
    }

    #[test]
    fn equal_loss_counts_as_no_improvement() {
        let mut stopper = EarlyStop::new(2);
        assert_eq!(stopper.observe(1, 1.0), (true, false));
        assert_eq!(stopper.observe(2, 1.0), (false, false));
        assert_eq!(stopper.observe(3, 1.0), (false, true));
    }

    #[test]
    fn same_seed_reproduces_history_exactly() {
        let set = toy_set();
        let (params_a, hist_a) = train(&tiny_config(), &set, &set).unwrap();
        let (params_b, hist_b) = train(&tiny_config(), &set, &set).unwrap();
        assert_eq!(hist_a, hist_b);
        assert_eq!(params_a, params_b);
    }

    #[test]
    fn loss_decreases_on_a_toy_set() {
        let set = toy_set();
        let config = ModelConfig {
            max_epochs: 15,
            dropout: 0.0,
            ..tiny_config()
        };
        let (_, hist) = train(&config, &set, &set).unwrap();
        let first = hist.epochs.first().unwrap().train_loss;
        let last = hist.epochs.last().unwrap().train_loss;
        assert!(last < first, "no learning: {first} -> {last}");
    }

    #[test]
    fn empty_sets_are_rejected() {
        assert!(train(&tiny_config(), &[], &toy_set()).is_err());
        assert!(train(&tiny_config(), &toy_set(), &[]).is_err());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let set = toy_set();
        let params = init_params(&tiny_config()).unwrap();
        assert_eq!(evaluate_loss(&params, &set), evaluate_loss(&params, &set));
    }
}
