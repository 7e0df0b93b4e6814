use featlab_data::binary::generate;
use featlab_data::navon::enumerate;
use featlab_data::{BinaryDataset, BinaryDatasetSpec, Feature, NavonSpec};

#[test]
fn binary_dataset_round_trips_through_disk() {
    let spec = BinaryDatasetSpec::new(0.7, 0.9, 300, 11);
    let data = generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write(dir.path(), "train").unwrap();
    let back = BinaryDataset::read(dir.path(), "train").unwrap();
    assert_eq!(back.inputs(), data.inputs());
    assert_eq!(back.labels(), data.labels());
    assert_eq!(back.ids(), data.ids());
}

#[test]
fn same_spec_same_dataset_other_seed_differs() {
    let a = generate(&BinaryDatasetSpec::new(0.8, 0.9, 200, 1)).unwrap();
    let b = generate(&BinaryDatasetSpec::new(0.8, 0.9, 200, 1)).unwrap();
    let c = generate(&BinaryDatasetSpec::new(0.8, 0.9, 200, 2)).unwrap();
    assert_eq!(a.inputs(), b.inputs());
    assert_ne!(a.inputs(), c.inputs());
}

#[test]
fn certain_features_always_match() {
    let d = generate(&BinaryDatasetSpec::new(1.0, 1.0, 500, 5)).unwrap();
    assert_eq!(d.match_rate(Feature::Easy), 1.0);
    assert_eq!(d.match_rate(Feature::Hard), 1.0);
    let ones = d.labels().iter().filter(|&&l| l == 1).count();
    assert_eq!(ones, 250);
}

#[test]
fn navon_grid_excludes_same_letter_pairs() {
    let items = enumerate(&NavonSpec::default()).unwrap();
    assert_eq!(items.len(), 26 * 25 * 5);
    let small = NavonSpec {
        n_letters: 3,
        positions: 2,
        ..NavonSpec::default()
    };
    assert_eq!(enumerate(&small).unwrap().len(), 3 * 2 * 2);
}
