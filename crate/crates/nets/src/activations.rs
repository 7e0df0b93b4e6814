use featlab_core::{Error, Matrix, Result};
use serde::{Deserialize, Serialize};

use crate::network::Network;

/// Activations of a frozen model at one probe, one row per stimulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationMatrix {
    pub probe: String,
    pub model_id: String,
    pub stimulus_ids: Vec<u64>,
    pub values: Matrix,
}

impl ActivationMatrix {
    pub fn new(probe: impl Into<String>, model_id: impl Into<String>, stimulus_ids: Vec<u64>, values: Matrix) -> Result<Self> {
        if stimulus_ids.len() != values.rows() {
            return Err(Error::config(format!(
                "{} stimulus ids for {} activation rows",
                stimulus_ids.len(),
                values.rows()
            )));
        }
        Ok(ActivationMatrix {
            probe: probe.into(),
            model_id: model_id.into(),
            stimulus_ids,
            values,
        })
    }

    pub fn stimuli(&self) -> usize {
        self.values.rows()
    }

    pub fn units(&self) -> usize {
        self.values.cols()
    }
}

/// Runs `inputs` through `model` and wraps the requested probes.
///
/// Large stimulus sets are processed in chunks so peak memory stays bounded;
/// rows keep the input order.
pub fn capture<N: Network>(
    model: &N,
    model_id: &str,
    inputs: &Matrix,
    stimulus_ids: &[u64],
    probes: &[&str],
) -> Result<Vec<ActivationMatrix>> {
    if stimulus_ids.len() != inputs.rows() {
        return Err(Error::config("stimulus ids do not match input rows"));
    }
    const CHUNK: usize = 256;
    let mut parts: Vec<Vec<f64>> = vec![Vec::new(); probes.len()];
    let mut widths = vec![0usize; probes.len()];
    let all: Vec<usize> = (0..inputs.rows()).collect();
    for chunk in all.chunks(CHUNK.max(1)) {
        let x = inputs.select_rows(chunk);
        let (_, acts) = model.forward_with_activations(&x, probes)?;
        for (i, p) in probes.iter().enumerate() {
            let m = &acts[*p];
            widths[i] = m.cols();
            parts[i].extend_from_slice(m.as_slice());
        }
    }
    if inputs.rows() == 0 {
        // still validate probe names
        model.forward_with_activations(inputs, probes)?;
    }
    probes
        .iter()
        .zip(parts)
        .zip(widths)
        .map(|((p, data), w)| {
            ActivationMatrix::new(*p, model_id, stimulus_ids.to_vec(), Matrix::new(inputs.rows(), w, data)?)
        })
        .collect()
}
