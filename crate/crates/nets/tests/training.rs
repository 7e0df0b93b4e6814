use featlab_core::Rng;
use featlab_data::binary::generate;
use featlab_data::{BinaryDatasetSpec, Feature};
use featlab_nets::checkpoint::{load, save};
use featlab_nets::{feature_reliance, train, Labels, Mlp, MlpSpec, Network, TrainConfig, TrainData};

fn binary_data(spec: &BinaryDatasetSpec) -> TrainData {
    let d = generate(spec).unwrap();
    TrainData::new(d.inputs(), Labels::binary(&d.labels())).unwrap()
}

#[test]
fn perfectly_predictive_easy_feature_is_relied_on() {
    let spec = BinaryDatasetSpec::new(1.0, 0.9, 256, 3);
    let data = binary_data(&spec);
    let cfg = TrainConfig::full_batch_gd(0.2, 300, 3);
    let out = train(Mlp::init(MlpSpec::binary_task(), 3).unwrap(), &data, None, &cfg).unwrap();
    let easy = feature_reliance(&out.model, &spec, Feature::Easy, &mut Rng::seed_from(9)).unwrap();
    let hard = feature_reliance(&out.model, &spec, Feature::Hard, &mut Rng::seed_from(9)).unwrap();
    assert!(easy > 0.95, "easy reliance {easy}");
    assert!(hard < easy, "hard {hard} easy {easy}");
}

#[test]
fn trained_model_survives_a_checkpoint() {
    let spec = BinaryDatasetSpec::new(0.8, 0.9, 128, 4);
    let data = binary_data(&spec);
    let cfg = TrainConfig::full_batch_gd(0.2, 50, 4);
    let out = train(Mlp::init(MlpSpec::binary_task(), 4).unwrap(), &data, None, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save(dir.path(), "m", &out.model, Some(4), Some(&cfg), Some(&out.history)).unwrap();
    let (back, manifest): (Mlp, _) = load(dir.path(), "m").unwrap();
    assert_eq!(manifest.seed, Some(4));
    assert_eq!(back.params(), out.model.params());
    assert_eq!(back.predict(&data.inputs).unwrap(), out.model.predict(&data.inputs).unwrap());
}

#[test]
fn same_seed_same_training() {
    let data = binary_data(&BinaryDatasetSpec::new(0.6, 0.9, 128, 8));
    let cfg = TrainConfig::adam(1e-3, 1e-4, 32, 5, 8);
    let run = || train(Mlp::init(MlpSpec::binary_task(), 8).unwrap(), &data, Some(&data), &cfg).unwrap().model;
    assert_eq!(run().params(), run().params());
}
