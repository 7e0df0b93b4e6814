use std::collections::BTreeMap;

use featlab_core::{cross_entropy, Error, Matrix, Result, Targets};

/// Targets for a batch of examples.
#[derive(Clone, Debug, PartialEq)]
pub enum Labels {
    /// One class index per example, scored with softmax cross-entropy.
    Classes { labels: Vec<usize>, n_classes: usize },
    /// `n × k` matrix of independent 0/1 targets, scored with one binary
    /// cross-entropy per column, summed across columns.
    Binary(Matrix),
}

impl Labels {
    pub fn classes(labels: Vec<usize>, n_classes: usize) -> Result<Labels> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::config(format!("label {bad} out of range for {n_classes} classes")));
        }
        Ok(Labels::Classes { labels, n_classes })
    }

    /// Single-column binary targets.
    pub fn binary(values: &[u8]) -> Labels {
        Labels::Binary(Matrix::new(values.len(), 1, values.iter().map(|&v| v as f64).collect()).unwrap())
    }

    /// Two-column targets (one column per task).
    pub fn binary_pair(first: &[u8], second: &[u8]) -> Result<Labels> {
        if first.len() != second.len() {
            return Err(Error::config("task label vectors differ in length"));
        }
        let data = first
            .iter()
            .zip(second)
            .flat_map(|(&a, &b)| [a as f64, b as f64])
            .collect();
        Ok(Labels::Binary(Matrix::new(first.len(), 2, data)?))
    }

    pub fn len(&self) -> usize {
        match self {
            Labels::Classes { labels, .. } => labels.len(),
            Labels::Binary(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Width of the model output these labels expect.
    pub fn output_width(&self) -> usize {
        match self {
            Labels::Classes { n_classes, .. } => *n_classes,
            Labels::Binary(m) => m.cols(),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Labels {
        match self {
            Labels::Classes { labels, n_classes } => Labels::Classes {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
            Labels::Binary(m) => Labels::Binary(m.select_rows(idx)),
        }
    }

    /// Mean loss of predicted probabilities.
    pub fn loss(&self, probs: &Matrix) -> Result<f64> {
        self.check_width(probs)?;
        match self {
            Labels::Classes { labels, .. } => cross_entropy(probs, Targets::Classes(labels)),
            Labels::Binary(m) => cross_entropy(probs, Targets::Binary(m.as_slice())),
        }
    }

    /// Gradient of the mean loss with respect to the output pre-activations,
    /// i.e. `(p - y) / n` for both sigmoid and softmax heads.
    pub fn output_delta(&self, probs: &Matrix) -> Result<Matrix> {
        self.check_width(probs)?;
        let n = probs.rows() as f64;
        let mut d = probs.clone();
        match self {
            Labels::Classes { labels, .. } => {
                for (r, &y) in labels.iter().enumerate() {
                    d[(r, y)] -= 1.0;
                }
            }
            Labels::Binary(m) => {
                for (v, y) in d.as_mut_slice().iter_mut().zip(m.as_slice()) {
                    *v -= y;
                }
            }
        }
        d.map_inplace(|v| v / n);
        Ok(d)
    }

    /// Fraction correct: argmax for classes, 0.5 threshold per binary output
    /// (averaged over all outputs).
    pub fn accuracy(&self, probs: &Matrix) -> Result<f64> {
        self.check_width(probs)?;
        Ok(match self {
            Labels::Classes { labels, .. } => {
                let hits = probs
                    .argmax_rows()
                    .iter()
                    .zip(labels)
                    .filter(|(p, y)| p == y)
                    .count();
                hits as f64 / labels.len() as f64
            }
            Labels::Binary(m) => {
                let hits = probs
                    .as_slice()
                    .iter()
                    .zip(m.as_slice())
                    .filter(|(&p, &y)| ((p > 0.5) as u8 as f64) == y)
                    .count();
                hits as f64 / m.as_slice().len() as f64
            }
        })
    }

    fn check_width(&self, probs: &Matrix) -> Result<()> {
        if probs.rows() != self.len() || probs.cols() != self.output_width() {
            return Err(Error::config(format!(
                "predictions are {}x{}, labels expect {}x{}",
                probs.rows(),
                probs.cols(),
                self.len(),
                self.output_width()
            )));
        }
        Ok(())
    }
}

/// Inputs, targets and stable stimulus ids.
///
/// Full-batch training visits examples in ascending id order, so permuting
/// the rows of a dataset leaves the trained parameters bit-identical.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainData {
    pub inputs: Matrix,
    pub labels: Labels,
    pub ids: Vec<u64>,
}

impl TrainData {
    /// Ids default to row positions.
    pub fn new(inputs: Matrix, labels: Labels) -> Result<TrainData> {
        let ids = (0..inputs.rows() as u64).collect();
        TrainData::with_ids(inputs, labels, ids)
    }

    pub fn with_ids(inputs: Matrix, labels: Labels, ids: Vec<u64>) -> Result<TrainData> {
        if inputs.rows() != labels.len() || ids.len() != labels.len() {
            return Err(Error::config(format!(
                "{} input rows, {} labels, {} ids",
                inputs.rows(),
                labels.len(),
                ids.len()
            )));
        }
        Ok(TrainData { inputs, labels, ids })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> TrainData {
        TrainData {
            inputs: self.inputs.select_rows(idx),
            labels: self.labels.select(idx),
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
        }
    }

    /// Rows reordered by ascending id (stable for equal ids).
    pub fn sorted_by_id(&self) -> TrainData {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| self.ids[i]);
        self.select(&order)
    }
}

/// Parameter gradients, one buffer per parameter tensor in
/// [`Network::params`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn zeros_like<N: Network>(model: &N) -> Grads {
        Grads(model.params().iter().map(|p| vec![0.0; p.len()]).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// A differentiable model over row-major input matrices.
pub trait Network: Clone + Send + Sync {
    /// Parameter tensors in a fixed, documented order.
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;
    fn input_width(&self) -> usize;
    fn output_width(&self) -> usize;
    /// Probe points this model can capture, lowest first.
    fn probe_names(&self) -> Vec<String>;

    /// Output probabilities plus post-nonlinearity activations at the
    /// requested probes.
    fn forward_with_activations(&self, inputs: &Matrix, probes: &[&str]) -> Result<(Matrix, BTreeMap<String, Matrix>)>;

    /// Mean loss and its exact gradient (no regularisation).
    fn loss_and_grads(&self, inputs: &Matrix, labels: &Labels) -> Result<(f64, Grads)>;

    fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(self.forward_with_activations(inputs, &[])?.0)
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Flattened copy of every parameter.
    fn flat_params(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.iter().copied()).collect()
    }
}

/// Loss and gradient including the coupled L2 term `wd/2 · Σθ²`.
pub fn gradients<N: Network>(model: &N, data: &TrainData, weight_decay: f64) -> Result<(f64, Grads)> {
    if data.is_empty() {
        return Err(Error::config("gradient of an empty batch"));
    }
    let (mut loss, mut grads) = model.loss_and_grads(&data.inputs, &data.labels)?;
    if weight_decay != 0.0 {
        let mut sq = 0.0;
        for (g, p) in grads.0.iter_mut().zip(model.params()) {
            for (gi, &pi) in g.iter_mut().zip(p) {
                *gi += weight_decay * pi;
                sq += pi * pi;
            }
        }
        loss += 0.5 * weight_decay * sq;
    }
    if !loss.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite loss {loss} on batch of {} (gradient norm {})",
            data.len(),
            grads.norm()
        )));
    }
    Ok((loss, grads))
}

/// Resolves probe names against a model's list, reporting the first unknown.
pub(crate) fn check_probes(available: &[String], requested: &[&str]) -> Result<()> {
    for p in requested {
        if !available.iter().any(|a| a == p) {
            return Err(Error::config(format!(
                "unknown probe {p:?}; available: {}",
                available.join(", ")
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_delta_and_accuracy() {
        let labels = Labels::classes(vec![0, 2], 3).unwrap();
        let p = Matrix::from_rows(&[[0.7, 0.2, 0.1], [0.2, 0.5, 0.3]]).unwrap();
        assert_eq!(labels.accuracy(&p).unwrap(), 0.5);
        let d = labels.output_delta(&p).unwrap();
        assert!((d[(0, 0)] - (-0.15)).abs() < 1e-15);
        assert!((d[(1, 2)] - (-0.35)).abs() < 1e-15);
        assert!(Labels::classes(vec![3], 3).is_err());
    }

    #[test]
    fn binary_pair_layout() {
        let l = Labels::binary_pair(&[1, 0], &[0, 1]).unwrap();
        match l {
            Labels::Binary(m) => assert_eq!(m.as_slice(), &[1.0, 0.0, 0.0, 1.0]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn sorting_by_id() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let d = TrainData::with_ids(x, Labels::binary(&[1, 0, 1]), vec![9, 2, 5]).unwrap();
        let s = d.sorted_by_id();
        assert_eq!(s.inputs.as_slice(), &[2.0, 3.0, 1.0]);
        assert_eq!(s.ids, vec![2, 5, 9]);
    }
}
