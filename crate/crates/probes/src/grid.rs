//! Hyperparameter-grid search for linear decoders.

use featlab_core::{Error, Result, Rng};
use featlab_nets::{train, CheckpointSelection, Labels, Mlp, MlpSpec, OutputKind, TrainConfig, TrainData};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{DecodeData, LinearDecoder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderGrid {
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for DecoderGrid {
    fn default() -> Self {
        DecoderGrid {
            learning_rates: vec![1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            weight_decays: vec![0.0, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1],
            epochs: 250,
            batch_size: 64,
        }
    }
}

impl DecoderGrid {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() || self.weight_decays.is_empty() {
            return Err(Error::config("decoder grid has no cells"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("decoder batch size must be positive"));
        }
        Ok(())
    }

    /// `(lr, wd)` pairs ordered by learning rate, then weight decay.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut lrs = self.learning_rates.clone();
        let mut wds = self.weight_decays.clone();
        lrs.sort_by(f64::total_cmp);
        wds.sort_by(f64::total_cmp);
        lrs.iter().flat_map(|&lr| wds.iter().map(move |&wd| (lr, wd))).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Linear,
    Nonlinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub val_accuracy: f64,
    /// Training hit a non-finite loss; accuracy is scored 0.
    pub failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub feature: String,
    pub probe: String,
    pub kind: DecoderKind,
    pub n_classes: usize,
    pub chance: f64,
    pub best_val_accuracy: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub cells: Vec<CellResult>,
    /// Training labels took a single value.
    pub degenerate: bool,
}

/// Flat record for tabulation, one per grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeRow {
    pub feature: String,
    pub probe: String,
    pub lr: f64,
    pub wd: f64,
    pub val_accuracy: f64,
    pub chance: f64,
}

impl DecodeReport {
    pub fn named(mut self, feature: &str, probe: &str) -> DecodeReport {
        self.feature = feature.to_string();
        self.probe = probe.to_string();
        self
    }

    pub fn rows(&self) -> Vec<DecodeRow> {
        self.cells
            .iter()
            .map(|c| DecodeRow {
                feature: self.feature.clone(),
                probe: self.probe.clone(),
                lr: c.learning_rate,
                wd: c.weight_decay,
                val_accuracy: c.val_accuracy,
                chance: self.chance,
            })
            .collect()
    }

    /// Picks the best cell; earlier cells win ties.
    pub(crate) fn from_cells(kind: DecoderKind, n_classes: usize, cells: Vec<CellResult>, degenerate: bool) -> DecodeReport {
        let mut best = 0;
        for (i, c) in cells.iter().enumerate() {
            if c.val_accuracy > cells[best].val_accuracy {
                best = i;
            }
        }
        DecodeReport {
            feature: String::new(),
            probe: String::new(),
            kind,
            n_classes,
            chance: 1.0 / n_classes as f64,
            best_val_accuracy: cells[best].val_accuracy,
            learning_rate: cells[best].learning_rate,
            weight_decay: cells[best].weight_decay,
            cells,
            degenerate,
        }
    }
}

pub(crate) fn check_pair(train: &DecodeData, val: &DecodeData, n_classes: usize) -> Result<()> {
    if n_classes < 2 {
        return Err(Error::config("decoding needs at least two classes"));
    }
    if train.is_empty() || val.is_empty() {
        return Err(Error::config("decode sets must be non-empty"));
    }
    if train.width() != val.width() {
        return Err(Error::config(format!(
            "train activations have {} units, validation {}",
            train.width(),
            val.width()
        )));
    }
    if let Some(&bad) = train.labels.iter().chain(&val.labels).find(|&&l| l >= n_classes) {
        return Err(Error::config(format!("label {bad} out of range for {n_classes} classes")));
    }
    Ok(())
}

/// Fits one softmax regression from zero initialization with mini-batch Adam.
///
/// Returns `None` when training diverged.
pub fn fit_linear_decoder(
    train_set: &DecodeData,
    n_classes: usize,
    learning_rate: f64,
    weight_decay: f64,
    grid: &DecoderGrid,
    seed: u64,
) -> Result<Option<LinearDecoder>> {
    let spec = MlpSpec {
        widths: vec![train_set.width(), n_classes],
        output: OutputKind::Softmax,
        leaky_slope: featlab_core::DEFAULT_LEAKY_SLOPE,
    };
    let data = TrainData::new(train_set.acts.clone(), Labels::classes(train_set.labels.clone(), n_classes)?)?;
    let mut cfg = TrainConfig::adam(learning_rate, weight_decay, grid.batch_size, grid.epochs, seed);
    cfg.checkpoint_selection = CheckpointSelection::Final;
    let out = train(Mlp::zeros(spec)?, &data, None, &cfg)?;
    if out.history.diverged.is_some() {
        return Ok(None);
    }
    Ok(Some(LinearDecoder::from_mlp("", n_classes, &out.model)))
}

/// Trains one decoder per grid cell and reports the best final-epoch
/// validation accuracy (ties go to the smaller learning rate, then the
/// smaller weight decay). Diverged cells score 0.
pub fn train_linear_decoder_grid(
    train_set: &DecodeData,
    val_set: &DecodeData,
    n_classes: usize,
    grid: &DecoderGrid,
    rng: &mut Rng,
) -> Result<DecodeReport> {
    grid.validate()?;
    check_pair(train_set, val_set, n_classes)?;
    let cells = grid.cells();
    let base = Rng::seed_from(rng.next_u64());

    if let Some(only) = train_set.constant_label() {
        let acc = val_set.labels.iter().filter(|&&l| l == only).count() as f64 / val_set.len() as f64;
        let results = cells
            .iter()
            .map(|&(lr, wd)| CellResult {
                learning_rate: lr,
                weight_decay: wd,
                val_accuracy: acc,
                failed: false,
            })
            .collect();
        return Ok(DecodeReport::from_cells(DecoderKind::Linear, n_classes, results, true));
    }

    let results = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(lr, wd))| {
            let seed = base.child(i as u64).seed();
            let decoder = fit_linear_decoder(train_set, n_classes, lr, wd, grid, seed)?;
            let (val_accuracy, failed) = match decoder {
                Some(d) => (d.accuracy(val_set)?, false),
                None => (0.0, true),
            };
            Ok(CellResult {
                learning_rate: lr,
                weight_decay: wd,
                val_accuracy,
                failed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecodeReport::from_cells(DecoderKind::Linear, n_classes, results, false))
}
