use featlab_core::{Error, Matrix, Result};
use featlab_nets::{Mlp, Network, OutputKind};
use serde::{Deserialize, Serialize};

/// Activations at one probe paired with integer labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeData {
    pub acts: Matrix,
    pub labels: Vec<usize>,
}

impl DecodeData {
    pub fn new(acts: Matrix, labels: Vec<usize>) -> Result<DecodeData> {
        if acts.rows() != labels.len() {
            return Err(Error::config(format!(
                "{} activation rows for {} labels",
                acts.rows(),
                labels.len()
            )));
        }
        Ok(DecodeData { acts, labels })
    }

    /// Binary labels widened to class indices.
    pub fn binary(acts: Matrix, labels: &[u8]) -> Result<DecodeData> {
        DecodeData::new(acts, labels.iter().map(|&l| l as usize).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.acts.cols()
    }

    /// The single label value when every label agrees.
    pub fn constant_label(&self) -> Option<usize> {
        let first = *self.labels.first()?;
        self.labels.iter().all(|&l| l == first).then_some(first)
    }
}

/// Multinomial logistic regression on probe activations.
///
/// Binary decoders keep a single sigmoid logit (`weights` is `D × 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDecoder {
    pub probe: String,
    pub n_classes: usize,
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub output: OutputKind,
}

impl LinearDecoder {
    pub(crate) fn from_mlp(probe: &str, n_classes: usize, model: &Mlp) -> LinearDecoder {
        LinearDecoder {
            probe: probe.to_string(),
            n_classes,
            weights: model.weights()[0].clone(),
            bias: model.biases()[0].clone(),
            output: model.spec().output,
        }
    }

    /// Predicted class per activation row.
    pub fn predict(&self, acts: &Matrix) -> Result<Vec<usize>> {
        let mut z = featlab_core::matmul(acts, &self.weights)?;
        z.add_row_broadcast(&self.bias);
        Ok(match self.output {
            // argmax of softmax is argmax of the logits
            OutputKind::Softmax => z.argmax_rows(),
            OutputKind::Sigmoid => z.as_slice().iter().map(|&v| (v > 0.0) as usize).collect(),
        })
    }

    pub fn accuracy(&self, data: &DecodeData) -> Result<f64> {
        accuracy_of(&self.predict(&data.acts)?, &data.labels)
    }
}

/// One leaky-rectifier hidden layer, then a softmax (or sigmoid) head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearDecoder {
    pub probe: String,
    pub n_classes: usize,
    pub model: Mlp,
}

impl NonlinearDecoder {
    pub const HIDDEN: usize = 64;

    pub fn predict(&self, acts: &Matrix) -> Result<Vec<usize>> {
        let p = self.model.predict(acts)?;
        Ok(match self.model.spec().output {
            OutputKind::Softmax => p.argmax_rows(),
            OutputKind::Sigmoid => p.as_slice().iter().map(|&v| (v > 0.5) as usize).collect(),
        })
    }

    pub fn accuracy(&self, data: &DecodeData) -> Result<f64> {
        accuracy_of(&self.predict(&data.acts)?, &data.labels)
    }
}

pub(crate) fn accuracy_of(pred: &[usize], labels: &[usize]) -> Result<f64> {
    if pred.len() != labels.len() || labels.is_empty() {
        return Err(Error::config("accuracy needs matching, non-empty predictions and labels"));
    }
    let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}
