//! Training loop with best-validation checkpointing and snapshots.

use featlab_core::{Error, Result, Rng};
use serde::{Deserialize, Serialize};

use crate::network::{gradients, Network, TrainData};
use crate::optim::{sgd_step, Adam, AdamState, OptimizerKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointSelection {
    /// Highest validation accuracy, earliest epoch on ties.
    #[default]
    BestValAccuracy,
    /// Parameters after the last epoch.
    Final,
}

/// Stop early once the training loss improves by less than `min_delta`
/// over `window` epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub window: usize,
    pub min_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// `None` trains on the whole set each step.
    pub batch_size: Option<usize>,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default)]
    pub checkpoint_selection: CheckpointSelection,
    /// Epochs (0 = before any update) at which to keep a copy of the model.
    #[serde(default)]
    pub snapshot_epochs: Vec<usize>,
    #[serde(default)]
    pub plateau: Option<Plateau>,
}

impl TrainConfig {
    /// Mini-batch Adam as used for the vision models.
    pub fn adam(learning_rate: f64, weight_decay: f64, batch_size: usize, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Adam,
            learning_rate,
            weight_decay,
            batch_size: Some(batch_size),
            epochs,
            seed,
            checkpoint_selection: CheckpointSelection::BestValAccuracy,
            snapshot_epochs: Vec::new(),
            plateau: None,
        }
    }

    /// Full-batch gradient descent keeping the final parameters.
    pub fn full_batch_gd(learning_rate: f64, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            optimizer: OptimizerKind::FullBatchGd,
            learning_rate,
            weight_decay: 0.0,
            batch_size: None,
            epochs,
            seed,
            checkpoint_selection: CheckpointSelection::Final,
            snapshot_epochs: Vec::new(),
            plateau: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::config("weight decay must be non-negative"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::config("batch size must be positive"));
        }
        if self.optimizer == OptimizerKind::FullBatchGd && self.batch_size.is_some() {
            return Err(Error::config("full-batch gradient descent takes no batch size"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's updates (epoch 0: initial loss).
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub selected_epoch: usize,
    pub selected_val_accuracy: Option<f64>,
    /// Set when training stopped on a non-finite loss.
    pub diverged: Option<String>,
}

impl History {
    pub fn max_val_accuracy(&self) -> Option<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.val_accuracy)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<N> {
    pub model: N,
    pub history: History,
    /// `(epoch, model)` for each requested snapshot epoch that was reached.
    pub snapshots: Vec<(usize, N)>,
}

fn val_accuracy<N: Network>(model: &N, val: Option<&TrainData>) -> Result<Option<f64>> {
    match val {
        Some(v) => Ok(Some(v.labels.accuracy(&model.predict(&v.inputs)?)?)),
        None => Ok(None),
    }
}

/// Trains `model` on `data`.
///
/// Records the loss and validation accuracy before training (epoch 0) and
/// after every epoch. A non-finite loss stops training; the outcome then
/// carries `history.diverged` and the checkpoint selected so far.
pub fn train<N: Network>(model: N, data: &TrainData, val: Option<&TrainData>, config: &TrainConfig) -> Result<TrainOutcome<N>> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    if data.inputs.cols() != model.input_width() {
        return Err(Error::config(format!(
            "training inputs have width {}, model expects {}",
            data.inputs.cols(),
            model.input_width()
        )));
    }
    if config.checkpoint_selection == CheckpointSelection::BestValAccuracy && val.is_none() {
        return Err(Error::config("best-validation checkpointing needs a validation set"));
    }

    let full = data.sorted_by_id();
    let mut shuffle_rng = Rng::seed_from(config.seed).child_named("batch-order");
    let mut adam = AdamState::new(&model, Adam::default());
    let mut model = model;
    let mut history = History::default();
    let mut snapshots = Vec::new();

    let initial_loss = gradients(&model, &full, config.weight_decay).map(|(l, _)| l);
    let initial_val = val_accuracy(&model, val)?;
    history.epochs.push(EpochRecord {
        epoch: 0,
        train_loss: *initial_loss.as_ref().unwrap_or(&f64::NAN),
        val_accuracy: initial_val,
    });
    if config.snapshot_epochs.contains(&0) {
        snapshots.push((0, model.clone()));
    }
    let mut best = model.clone();
    history.selected_epoch = 0;
    history.selected_val_accuracy = initial_val;
    if let Err(e) = initial_loss {
        history.diverged = Some(e.to_string());
        return Ok(TrainOutcome { model: best, history, snapshots });
    }

    for epoch in 1..=config.epochs {
        let step_result: Result<f64> = (|| {
            match (config.optimizer, config.batch_size) {
                (OptimizerKind::FullBatchGd, _) => {
                    let (loss, g) = gradients(&model, &full, config.weight_decay)?;
                    sgd_step(&mut model, &g, config.learning_rate);
                    Ok(loss)
                }
                (OptimizerKind::Adam, None) => {
                    let (loss, g) = gradients(&model, &full, config.weight_decay)?;
                    adam.apply(&mut model, &g, config.learning_rate);
                    Ok(loss)
                }
                (OptimizerKind::Adam, Some(bs)) => {
                    let order = shuffle_rng.permutation(full.len());
                    let mut total = 0.0;
                    let mut batches = 0usize;
                    for chunk in order.chunks(bs) {
                        let batch = full.select(chunk);
                        let (loss, g) = gradients(&model, &batch, config.weight_decay)?;
                        adam.apply(&mut model, &g, config.learning_rate);
                        total += loss;
                        batches += 1;
                    }
                    Ok(total / batches as f64)
                }
            }
        })();

        let loss = match step_result {
            Ok(l) => l,
            Err(e) => {
                history.diverged = Some(format!("epoch {epoch}: {e}"));
                break;
            }
        };
        let acc = val_accuracy(&model, val)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_accuracy: acc,
        });
        if config.snapshot_epochs.contains(&epoch) {
            snapshots.push((epoch, model.clone()));
        }
        match config.checkpoint_selection {
            CheckpointSelection::BestValAccuracy => {
                if acc > history.selected_val_accuracy {
                    history.selected_val_accuracy = acc;
                    history.selected_epoch = epoch;
                    best = model.clone();
                }
            }
            CheckpointSelection::Final => {
                history.selected_epoch = epoch;
                history.selected_val_accuracy = acc;
            }
        }
        if let Some(p) = config.plateau {
            if epoch >= p.window {
                let earlier = history.epochs[epoch - p.window].train_loss;
                if earlier - loss < p.min_delta {
                    break;
                }
            }
        }
    }

    if config.checkpoint_selection == CheckpointSelection::Final && history.diverged.is_none() {
        best = model;
    }
    Ok(TrainOutcome {
        model: best,
        history,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Mlp, MlpSpec, OutputKind};
    use crate::network::Labels;
    use featlab_core::Matrix;

    fn toy() -> TrainData {
        // separable on the first coordinate
        let mut rng = Rng::seed_from(0);
        let x = Matrix::from_fn(40, 3, |_, _| rng.uniform_range(-1.0, 1.0));
        let y: Vec<u8> = (0..40).map(|r| (x[(r, 0)] > 0.0) as u8).collect();
        TrainData::new(x, Labels::binary(&y)).unwrap()
    }

    fn small() -> Mlp {
        Mlp::init(
            MlpSpec {
                widths: vec![3, 8, 1],
                output: OutputKind::Sigmoid,
                leaky_slope: 0.01,
            },
            7,
        )
        .unwrap()
    }

    #[test]
    fn zero_lr_changes_nothing() {
        let data = toy();
        let m = small();
        let out = train(m.clone(), &data, Some(&data), &TrainConfig::adam(0.0, 0.0, 8, 5, 1)).unwrap();
        assert_eq!(out.model, m);
        let l0 = out.history.epochs[0].train_loss;
        assert!(out.history.epochs.iter().all(|e| (e.train_loss - l0).abs() < 1e-12));
        let out = train(m.clone(), &data, None, &TrainConfig::full_batch_gd(0.0, 5, 1)).unwrap();
        assert_eq!(out.model, m);
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = toy();
        let mut cfg = TrainConfig::full_batch_gd(0.5, 5000, 0);
        cfg.plateau = None;
        let out = train(small(), &data, None, &cfg).unwrap();
        let acc = data.labels.accuracy(&out.model.predict(&data.inputs).unwrap()).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn deterministic_history() {
        let data = toy();
        let cfg = TrainConfig::adam(0.01, 1e-4, 7, 20, 3);
        let a = train(small(), &data, Some(&data), &cfg).unwrap();
        let b = train(small(), &data, Some(&data), &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn checkpoint_is_best_val() {
        let data = toy();
        let out = train(small(), &data, Some(&data), &TrainConfig::adam(0.05, 0.0, 8, 30, 3)).unwrap();
        let h = &out.history;
        assert_eq!(h.selected_val_accuracy, h.max_val_accuracy());
        let first_best = h
            .epochs
            .iter()
            .find(|e| e.val_accuracy == h.max_val_accuracy())
            .unwrap()
            .epoch;
        assert_eq!(h.selected_epoch, first_best);
        let acc = data.labels.accuracy(&out.model.predict(&data.inputs).unwrap()).unwrap();
        assert_eq!(Some(acc), h.selected_val_accuracy);
    }

    #[test]
    fn full_batch_ignores_row_order() {
        let data = toy();
        let perm: Vec<usize> = Rng::seed_from(5).permutation(data.len());
        let shuffled = data.select(&perm);
        let cfg = TrainConfig::full_batch_gd(0.3, 50, 0);
        let a = train(small(), &data, None, &cfg).unwrap();
        let b = train(small(), &shuffled, None, &cfg).unwrap();
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn divergence_is_recorded() {
        let data = toy();
        let mut cfg = TrainConfig::full_batch_gd(1e300, 10, 0);
        cfg.weight_decay = 1.0;
        let out = train(small(), &data, None, &cfg).unwrap();
        assert!(out.history.diverged.is_some());
        assert!(out.history.epochs.len() < 12);
    }

    #[test]
    fn snapshots_are_taken() {
        let data = toy();
        let mut cfg = TrainConfig::full_batch_gd(0.1, 10, 0);
        cfg.snapshot_epochs = vec![0, 5, 10, 99];
        let out = train(small(), &data, None, &cfg).unwrap();
        let epochs: Vec<usize> = out.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(epochs, vec![0, 5, 10]);
        assert_eq!(out.snapshots[2].1, out.model);
    }
}
