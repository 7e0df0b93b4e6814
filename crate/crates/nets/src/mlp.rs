//! Fully connected networks with leaky-rectifier hidden layers.
//!
//! Parameter order is `W1, b1, W2, b2, …`, each `W` stored `fan_in × fan_out`
//! row-major. Probe points are named `hidden1 … hiddenK`; `final-hidden`
//! aliases the last hidden layer.

use std::collections::BTreeMap;

use featlab_core::activation::{leaky_relu_grad, leaky_relu_scalar, sigmoid_scalar, softmax_inplace};
use featlab_core::matrix::{matmul_nt, matmul_tn};
use featlab_core::{matmul, Error, Matrix, Result, Rng, DEFAULT_LEAKY_SLOPE};
use serde::{Deserialize, Serialize};

use crate::init::fan_in_uniform;
use crate::network::{check_probes, Grads, Labels, Network};

pub const FINAL_HIDDEN: &str = "final-hidden";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    /// Independent sigmoid per output unit.
    Sigmoid,
    /// Softmax across output units.
    Softmax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Input width, hidden widths, output width.
    pub widths: Vec<usize>,
    pub output: OutputKind,
    pub leaky_slope: f64,
}

impl MlpSpec {
    /// 32 → 256 → 128 → 64 → 64 → 1 with a sigmoid output.
    pub fn binary_task() -> MlpSpec {
        MlpSpec {
            widths: vec![32, 256, 128, 64, 64, 1],
            output: OutputKind::Sigmoid,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    /// Same trunk with two sigmoid outputs, one per task.
    pub fn multitask() -> MlpSpec {
        MlpSpec {
            widths: vec![32, 256, 128, 64, 64, 2],
            ..MlpSpec::binary_task()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::config("an MLP needs at least input and output widths"));
        }
        if let Some(i) = self.widths.iter().position(|&w| w == 0) {
            return Err(Error::config(format!("layer {i} has zero width")));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::config(format!("leaky slope {} outside (0,1)", self.leaky_slope)));
        }
        if self.output == OutputKind::Softmax && *self.widths.last().unwrap() < 2 {
            return Err(Error::config("softmax output needs at least two units"));
        }
        Ok(())
    }

    pub fn hidden_layers(&self) -> usize {
        self.widths.len() - 2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    spec: MlpSpec,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

struct Trace {
    /// Post-activation per layer, `acts[0]` is the input.
    acts: Vec<Matrix>,
    /// Pre-activation per hidden layer.
    pre: Vec<Matrix>,
    probs: Matrix,
}

impl Mlp {
    /// Fan-in scaled uniform weights, zero biases.
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Mlp> {
        spec.validate()?;
        let mut rng = Rng::seed_from(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in spec.widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            weights.push(Matrix::new(fan_in, fan_out, fan_in_uniform(&mut rng, fan_in, fan_in * fan_out))?);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Mlp { spec, weights, biases })
    }

    /// All parameters zero.
    pub fn zeros(spec: MlpSpec) -> Result<Mlp> {
        spec.validate()?;
        let weights = spec.widths.windows(2).map(|w| Matrix::zeros(w[0], w[1])).collect();
        let biases = spec.widths[1..].iter().map(|&w| vec![0.0; w]).collect();
        Ok(Mlp { spec, weights, biases })
    }

    /// Builds from explicit layer parameters.
    pub fn from_layers(spec: MlpSpec, weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Mlp> {
        spec.validate()?;
        let layers = spec.widths.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::config("layer count does not match spec"));
        }
        for (l, w) in spec.widths.windows(2).enumerate() {
            if weights[l].shape() != (w[0], w[1]) || biases[l].len() != w[1] {
                return Err(Error::config(format!("layer {l} parameters have the wrong shape")));
            }
        }
        Ok(Mlp { spec, weights, biases })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    fn layers(&self) -> usize {
        self.weights.len()
    }

    fn probe_index(&self, name: &str) -> Option<usize> {
        let hidden = self.spec.hidden_layers();
        if name == FINAL_HIDDEN {
            return (hidden > 0).then_some(hidden);
        }
        let k: usize = name.strip_prefix("hidden")?.parse().ok()?;
        (1..=hidden).contains(&k).then_some(k)
    }

    fn run(&self, inputs: &Matrix) -> Result<Trace> {
        if inputs.cols() != self.spec.widths[0] {
            return Err(Error::config(format!(
                "input width {} does not match model width {}",
                inputs.cols(),
                self.spec.widths[0]
            )));
        }
        let slope = self.spec.leaky_slope;
        let mut acts = vec![inputs.clone()];
        let mut pre = Vec::new();
        for l in 0..self.layers() {
            let mut z = matmul(acts.last().unwrap(), &self.weights[l])?;
            z.add_row_broadcast(&self.biases[l]);
            if l + 1 < self.layers() {
                acts.push(z.map(|v| leaky_relu_scalar(v, slope)));
                pre.push(z);
            } else {
                let probs = match self.spec.output {
                    OutputKind::Sigmoid => z.map(sigmoid_scalar),
                    OutputKind::Softmax => {
                        let mut p = z;
                        for r in 0..p.rows() {
                            softmax_inplace(p.row_mut(r));
                        }
                        p
                    }
                };
                return Ok(Trace { acts, pre, probs });
            }
        }
        unreachable!("validated spec has at least one layer")
    }
}

impl Network for Mlp {
    fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice());
            out.push(b.as_slice());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.as_mut_slice());
            out.push(b.as_mut_slice());
        }
        out
    }

    fn input_width(&self) -> usize {
        self.spec.widths[0]
    }

    fn output_width(&self) -> usize {
        *self.spec.widths.last().unwrap()
    }

    fn probe_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.spec.hidden_layers()).map(|k| format!("hidden{k}")).collect();
        if self.spec.hidden_layers() > 0 {
            names.push(FINAL_HIDDEN.to_string());
        }
        names
    }

    fn forward_with_activations(&self, inputs: &Matrix, probes: &[&str]) -> Result<(Matrix, BTreeMap<String, Matrix>)> {
        check_probes(&self.probe_names(), probes)?;
        let trace = self.run(inputs)?;
        let mut captured = BTreeMap::new();
        for &p in probes {
            let k = self.probe_index(p).expect("checked above");
            captured.insert(p.to_string(), trace.acts[k].clone());
        }
        Ok((trace.probs, captured))
    }

    fn loss_and_grads(&self, inputs: &Matrix, labels: &Labels) -> Result<(f64, Grads)> {
        let trace = self.run(inputs)?;
        let loss = labels.loss(&trace.probs)?;
        let mut delta = labels.output_delta(&trace.probs)?;
        let slope = self.spec.leaky_slope;
        let mut grads = vec![Vec::new(); 2 * self.layers()];
        for l in (0..self.layers()).rev() {
            grads[2 * l] = matmul_tn(&trace.acts[l], &delta)?.into_vec();
            grads[2 * l + 1] = delta.column_sums();
            if l > 0 {
                let mut upstream = matmul_nt(&delta, &self.weights[l])?;
                for (d, &z) in upstream.as_mut_slice().iter_mut().zip(trace.pre[l - 1].as_slice()) {
                    *d *= leaky_relu_grad(z, slope);
                }
                delta = upstream;
            }
        }
        Ok((loss, Grads(grads)))
    }
}

/// Unweighted sum of the two binary cross-entropies of a two-output model.
pub fn multitask_loss(outputs: &Matrix, easy_label: &[u8], hard_label: &[u8]) -> Result<f64> {
    if outputs.cols() != 2 {
        return Err(Error::config("multitask loss needs exactly two outputs"));
    }
    Labels::binary_pair(easy_label, hard_label)?.loss(outputs)
}
