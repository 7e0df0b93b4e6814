//! Decoders for binary labels: a fixed-schedule logistic regression and a
//! one-hidden-layer network, no hyperparameter search.

use featlab_core::{Error, Result, Rng, DEFAULT_LEAKY_SLOPE};
use featlab_nets::{train, CheckpointSelection, Labels, Mlp, MlpSpec, OptimizerKind, OutputKind, Plateau, TrainConfig, TrainData};
use serde::{Deserialize, Serialize};

use crate::decoder::{accuracy_of, DecodeData, LinearDecoder, NonlinearDecoder};
use crate::grid::{check_pair, CellResult, DecodeReport, DecoderKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryDecoderConfig {
    pub kind: DecoderKind,
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` uses the whole set for every Adam step.
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub plateau: Option<Plateau>,
}

impl BinaryDecoderConfig {
    /// Zero-initialized logistic regression, Adam at 1e-3 for 5000 epochs.
    pub fn linear() -> Self {
        BinaryDecoderConfig {
            kind: DecoderKind::Linear,
            hidden: 0,
            learning_rate: 1e-3,
            epochs: 5000,
            batch_size: None,
            plateau: None,
        }
    }

    /// 64 leaky-rectifier hidden units, Adam at 1e-3 for 20000 epochs.
    pub fn nonlinear() -> Self {
        BinaryDecoderConfig {
            kind: DecoderKind::Nonlinear,
            hidden: NonlinearDecoder::HIDDEN,
            epochs: 20000,
            ..Self::linear()
        }
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: OptimizerKind::Adam,
            learning_rate: self.learning_rate,
            weight_decay: 0.0,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            checkpoint_selection: CheckpointSelection::Final,
            snapshot_epochs: Vec::new(),
            plateau: self.plateau,
        }
    }
}

/// A fitted binary decoder of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum BinaryDecoder {
    Linear(LinearDecoder),
    Nonlinear(NonlinearDecoder),
}

impl BinaryDecoder {
    pub fn accuracy(&self, data: &DecodeData) -> Result<f64> {
        match self {
            BinaryDecoder::Linear(d) => d.accuracy(data),
            BinaryDecoder::Nonlinear(d) => d.accuracy(data),
        }
    }
}

/// Fits a decoder on `train_set`; `None` when training diverged.
pub fn fit_binary_decoder(train_set: &DecodeData, config: &BinaryDecoderConfig, rng: &mut Rng) -> Result<Option<BinaryDecoder>> {
    let width = train_set.width();
    let labels: Vec<u8> = train_set.labels.iter().map(|&l| l as u8).collect();
    let data = TrainData::new(train_set.acts.clone(), Labels::binary(&labels))?;
    let seed = rng.next_u64();
    let model = match config.kind {
        DecoderKind::Linear => Mlp::zeros(MlpSpec {
            widths: vec![width, 1],
            output: OutputKind::Sigmoid,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        })?,
        DecoderKind::Nonlinear => Mlp::init(
            MlpSpec {
                widths: vec![width, config.hidden, 1],
                output: OutputKind::Sigmoid,
                leaky_slope: DEFAULT_LEAKY_SLOPE,
            },
            Rng::seed_from(seed).child_named("decoder-init").seed(),
        )?,
    };
    let out = train(model, &data, None, &config.train_config(seed))?;
    if out.history.diverged.is_some() {
        return Ok(None);
    }
    Ok(Some(match config.kind {
        DecoderKind::Linear => BinaryDecoder::Linear(LinearDecoder::from_mlp("", 2, &out.model)),
        DecoderKind::Nonlinear => BinaryDecoder::Nonlinear(NonlinearDecoder {
            probe: String::new(),
            n_classes: 2,
            model: out.model,
        }),
    }))
}

/// Trains one binary decoder and scores it on `val_set`.
///
/// Constant training labels skip training: the report predicts that label
/// and sets `degenerate`.
pub fn train_binary_decoder(train_set: &DecodeData, val_set: &DecodeData, config: &BinaryDecoderConfig, rng: &mut Rng) -> Result<DecodeReport> {
    check_pair(train_set, val_set, 2)?;
    if config.kind == DecoderKind::Nonlinear && config.hidden == 0 {
        return Err(Error::config("a nonlinear decoder needs hidden units"));
    }
    let cell = |val_accuracy, failed| CellResult {
        learning_rate: config.learning_rate,
        weight_decay: 0.0,
        val_accuracy,
        failed,
    };
    if let Some(only) = train_set.constant_label() {
        let acc = accuracy_of(&vec![only; val_set.len()], &val_set.labels)?;
        return Ok(DecodeReport::from_cells(config.kind, 2, vec![cell(acc, false)], true));
    }
    let result = match fit_binary_decoder(train_set, config, rng)? {
        Some(d) => cell(d.accuracy(val_set)?, false),
        None => cell(0.0, true),
    };
    Ok(DecodeReport::from_cells(config.kind, 2, vec![result], false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use featlab_core::Matrix;

    fn threshold_data(n: usize, rng: &mut Rng) -> DecodeData {
        // unit 1 sits at least 0.5 away from the threshold
        let mut acts = Matrix::from_fn(n, 3, |_, _| rng.normal());
        for r in 0..n {
            let v = acts[(r, 1)];
            acts[(r, 1)] = v.signum() * (0.5 + v.abs());
        }
        let labels = (0..n).map(|r| (acts[(r, 1)] > 0.0) as usize).collect();
        DecodeData::new(acts, labels).unwrap()
    }

    #[test]
    fn thresholded_unit_is_linearly_decodable() {
        let mut rng = Rng::seed_from(5);
        let tr = threshold_data(200, &mut rng);
        let va = threshold_data(200, &mut rng);
        let r = train_binary_decoder(&tr, &va, &BinaryDecoderConfig::linear(), &mut rng).unwrap();
        assert_eq!(r.best_val_accuracy, 1.0);
        assert_eq!(r.chance, 0.5);
        assert_eq!(r.cells.len(), 1);
    }

    #[test]
    fn constant_labels_set_degenerate() {
        let d = DecodeData::binary(Matrix::zeros(4, 2), &[1, 1, 1, 1]).unwrap();
        let r = train_binary_decoder(&d, &d, &BinaryDecoderConfig::linear(), &mut Rng::seed_from(0)).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.best_val_accuracy, 1.0);
    }

    #[test]
    fn non_binary_labels_rejected() {
        let d = DecodeData::new(Matrix::zeros(3, 2), vec![0, 1, 2]).unwrap();
        assert!(train_binary_decoder(&d, &d, &BinaryDecoderConfig::linear(), &mut Rng::seed_from(0)).is_err());
    }
}
