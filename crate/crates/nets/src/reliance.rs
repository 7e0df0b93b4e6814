use featlab_core::{Result, Rng};
use featlab_data::binary::make_feature_unpredictive;
use featlab_data::{BinaryDatasetSpec, Feature};

use crate::network::{Labels, Network};

/// Accuracy on a fresh set where the *other* feature is at chance and
/// `feature` matches the label. 0.5 means no reliance, 1.0 full reliance.
///
/// The probe set has `spec.n_examples` examples drawn from `rng`.
pub fn feature_reliance<N: Network>(model: &N, spec: &BinaryDatasetSpec, feature: Feature, rng: &mut Rng) -> Result<f64> {
    let probe = make_feature_unpredictive(spec, feature.other(), rng)?;
    let probs = model.predict(&probe.inputs())?;
    Labels::binary(&probe.labels()).accuracy(&probs)
}
