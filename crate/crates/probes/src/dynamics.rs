use featlab_core::{Matrix, Result, Rng};
use featlab_nets::Network;
use serde::{Deserialize, Serialize};

use crate::binary::{train_binary_decoder, BinaryDecoderConfig};
use crate::decoder::DecodeData;
use crate::grid::DecodeReport;

/// Labels for one feature on the shared decode inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    pub feature: String,
    pub train: Vec<u8>,
    pub val: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsPoint {
    pub epoch: usize,
    /// One report per label set, in input order.
    pub reports: Vec<DecodeReport>,
}

/// Decodes every label set from `probe` of each snapshot.
///
/// Each decoder gets its own stream derived from `(snapshot index, label set
/// index)`, so the series does not depend on evaluation order.
pub fn dynamics_probe<N: Network>(
    snapshots: &[(usize, N)],
    probe: &str,
    train_inputs: &Matrix,
    val_inputs: &Matrix,
    label_sets: &[LabelSet],
    config: &BinaryDecoderConfig,
    rng: &mut Rng,
) -> Result<Vec<DynamicsPoint>> {
    let base = Rng::seed_from(rng.next_u64());
    let mut series = Vec::with_capacity(snapshots.len());
    for (s, (epoch, model)) in snapshots.iter().enumerate() {
        let (_, tr) = model.forward_with_activations(train_inputs, &[probe])?;
        let (_, va) = model.forward_with_activations(val_inputs, &[probe])?;
        let (tr, va) = (&tr[probe], &va[probe]);
        let mut reports = Vec::with_capacity(label_sets.len());
        for (k, set) in label_sets.iter().enumerate() {
            let train_set = DecodeData::binary(tr.clone(), &set.train)?;
            let val_set = DecodeData::binary(va.clone(), &set.val)?;
            let mut r = base.child(s as u64).child(k as u64);
            reports.push(train_binary_decoder(&train_set, &val_set, config, &mut r)?.named(&set.feature, probe));
        }
        series.push(DynamicsPoint { epoch: *epoch, reports });
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use featlab_nets::{Mlp, MlpSpec, FINAL_HIDDEN};

    #[test]
    fn identical_snapshots_give_flat_series() {
        let model = Mlp::init(MlpSpec::binary_task(), 3).unwrap();
        let snaps = vec![(0, model.clone()), (10, model.clone()), (20, model)];
        let mut rng = Rng::seed_from(8);
        let x = Matrix::from_fn(64, 32, |_, _| rng.bit() as f64);
        let xv = Matrix::from_fn(64, 32, |_, _| rng.bit() as f64);
        let set = LabelSet {
            feature: "bit0".into(),
            train: (0..64).map(|r| x[(r, 0)] as u8).collect(),
            val: (0..64).map(|r| xv[(r, 0)] as u8).collect(),
        };
        let cfg = BinaryDecoderConfig::linear().with_epochs(200);
        let series = dynamics_probe(&snaps, FINAL_HIDDEN, &x, &xv, &[set], &cfg, &mut rng).unwrap();
        assert_eq!(series.iter().map(|p| p.epoch).collect::<Vec<_>>(), vec![0, 10, 20]);
        let accs: Vec<f64> = series.iter().map(|p| p.reports[0].best_val_accuracy).collect();
        // same activations, but each point gets its own decoder stream;
        // a full-batch zero-init decoder ignores it
        assert!(accs.iter().all(|&a| a == accs[0]), "{accs:?}");
        assert_eq!(series[0].reports[0].feature, "bit0");
    }
}
