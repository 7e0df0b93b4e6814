//! Runs on the binary-feature task.

use featlab_core::{Error, Result, Rng};
use featlab_data::binary::{sample_dataset, BinaryDataset};
use featlab_data::{BinaryDatasetSpec, Feature};
use featlab_nets::{capture, feature_reliance, train, History, Labels, Mlp, Network, TrainData, TrainOutcome, FINAL_HIDDEN};
use featlab_probes::{train_binary_decoder, BinaryDecoderConfig, DecodeData, DecodeReport};
use featlab_repsim::{pairwise_scores, SimilarityScore};

use crate::config::BinarySettings;
use crate::record::{run_id, Condition, RunRecord, SeriesPoint};

fn run_rng(condition: &Condition, seed: u64) -> Rng {
    Rng::seed_from(seed).child_named(&condition.label())
}

fn spec(settings: &BinarySettings, easy: f64, hard: f64, n: usize, seed: u64) -> BinaryDatasetSpec {
    BinaryDatasetSpec {
        easy_rule: settings.easy_rule,
        ..BinaryDatasetSpec::new(easy, hard, n, seed)
    }
}

/// Training set of a run. Multitask runs see both features at chance
/// against each other and learn one output per feature.
pub fn train_set(settings: &BinarySettings, condition: &Condition, seed: u64) -> Result<(BinaryDataset, Labels)> {
    let mut rng = run_rng(condition, seed).child_named("train-set");
    match condition {
        Condition::Binary { easy_predictivity } => {
            let ds = sample_dataset(&spec(settings, *easy_predictivity, settings.hard_predictivity, settings.n_train, seed), &mut rng)?;
            let labels = Labels::binary(&ds.labels());
            Ok((ds, labels))
        }
        Condition::Multitask | Condition::Untrained => {
            let ds = sample_dataset(&spec(settings, 0.5, 0.5, settings.n_train, seed), &mut rng)?;
            let labels = Labels::binary_pair(&ds.feature_values(Feature::Easy), &ds.feature_values(Feature::Hard))?;
            Ok((ds, labels))
        }
        _ => Err(Error::config(format!("{} is not a binary condition", condition.label()))),
    }
}

/// Untrained network for `seed`; every condition starts from it.
pub fn initial_model(settings: &BinarySettings, condition: &Condition, seed: u64) -> Result<Mlp> {
    let mut spec = settings.model.clone();
    if *condition == Condition::Multitask {
        *spec.widths.last_mut().unwrap() = 2;
    }
    Mlp::init(spec, seed)
}

pub fn train_binary(settings: &BinarySettings, condition: &Condition, seed: u64) -> Result<TrainOutcome<Mlp>> {
    let model = initial_model(settings, condition, seed)?;
    if *condition == Condition::Untrained {
        return Ok(TrainOutcome {
            model,
            history: History::default(),
            snapshots: Vec::new(),
        });
    }
    let (ds, labels) = train_set(settings, condition, seed)?;
    let data = TrainData::with_ids(ds.inputs(), labels, ds.ids())?;
    let mut config = settings.training.clone();
    config.seed = run_rng(condition, seed).child_named("train").seed();
    if let Some(d) = &settings.dynamics {
        config.snapshot_epochs = (0..=config.epochs).step_by(d.snapshot_every).collect();
    }
    train(model, &data, None, &config)
}

struct DecodeSets {
    train: BinaryDataset,
    val: BinaryDataset,
}

/// Decoding sets with both features independent of the label; shared by
/// every condition with the same seed.
fn decode_sets(settings: &BinarySettings, seed: u64, n: usize) -> Result<DecodeSets> {
    let mut rng = Rng::seed_from(seed).child_named(&format!("decode-sets-{n}"));
    let s = spec(settings, 0.5, 0.5, n, seed);
    Ok(DecodeSets {
        train: sample_dataset(&s, &mut rng)?,
        val: sample_dataset(&s, &mut rng)?,
    })
}

fn hidden(model: &Mlp, ds: &BinaryDataset) -> Result<featlab_core::Matrix> {
    let (_, mut acts) = model.forward_with_activations(&ds.inputs(), &[FINAL_HIDDEN])?;
    Ok(acts.remove(FINAL_HIDDEN).unwrap())
}

/// `(name, train labels, val labels)` for each decoded target.
fn targets(settings: &BinarySettings, sets: &DecodeSets, units: bool) -> Result<Vec<(String, Vec<u8>, Vec<u8>)>> {
    let mut out = Vec::new();
    for f in [Feature::Easy, Feature::Hard] {
        out.push((f.name().to_string(), sets.train.feature_values(f), sets.val.feature_values(f)));
    }
    if units {
        for &u in &settings.unit_probes {
            out.push((format!("unit{u}"), sets.train.unit_labels(u)?, sets.val.unit_labels(u)?));
        }
    }
    Ok(out)
}

fn decode(
    model: &Mlp,
    sets: &DecodeSets,
    wanted: &[(String, Vec<u8>, Vec<u8>)],
    cfg: &BinaryDecoderConfig,
    rng: &Rng,
) -> Result<Vec<DecodeReport>> {
    let (tr, va) = (hidden(model, &sets.train)?, hidden(model, &sets.val)?);
    wanted
        .iter()
        .map(|(name, ytr, yva)| {
            let mut r = rng.child_named(name);
            Ok(train_binary_decoder(&DecodeData::binary(tr.clone(), ytr)?, &DecodeData::binary(va.clone(), yva)?, cfg, &mut r)?
                .named(name, FINAL_HIDDEN))
        })
        .collect()
}

fn reliance_pair(settings: &BinarySettings, model: &Mlp, easy: f64, condition: &Condition, seed: u64) -> Result<(f64, f64)> {
    let s = spec(settings, easy, settings.hard_predictivity, settings.n_eval, seed);
    let rng = run_rng(condition, seed);
    Ok((
        feature_reliance(model, &s, Feature::Easy, &mut rng.child_named("reliance-easy"))?,
        feature_reliance(model, &s, Feature::Hard, &mut rng.child_named("reliance-hard"))?,
    ))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Fills `record` with reliance, decodability and, where configured,
/// nonlinear and snapshot metrics.
pub fn evaluate_binary(settings: &BinarySettings, outcome: &TrainOutcome<Mlp>, record: &mut RunRecord) -> Result<()> {
    let (condition, seed) = (record.condition.clone(), record.seed);
    if let Some(reason) = &outcome.history.diverged {
        record.diverged = Some(reason.clone());
        return Ok(());
    }
    let model = &outcome.model;
    let m = &mut record.metrics;
    if let Some(loss) = outcome.history.final_loss() {
        m.insert("final_loss".into(), loss);
    }
    if condition != Condition::Untrained {
        let (ds, labels) = train_set(settings, &condition, seed)?;
        m.insert("train_accuracy".into(), labels.accuracy(&model.predict(&ds.inputs())?)?);
    }
    let rng = run_rng(&condition, seed).child_named("decoders");
    let sets = decode_sets(settings, seed, settings.n_eval)?;
    let wanted = targets(settings, &sets, true)?;
    for r in decode(model, &sets, &wanted, &settings.decoder, &rng)? {
        m.insert(format!("decode/{}", r.feature), r.best_val_accuracy);
        record.decode.push(r);
    }
    let Condition::Binary { easy_predictivity } = condition else {
        return Ok(());
    };
    let (easy, hard) = reliance_pair(settings, model, easy_predictivity, &condition, seed)?;
    m.insert("reliance/easy".into(), easy);
    m.insert("reliance/hard".into(), hard);

    if let Some(check) = &settings.nonlinear {
        if check.predictivities.iter().any(|&p| close(p, easy_predictivity)) {
            let big = decode_sets(settings, seed, check.n_decode)?;
            let hard_only: Vec<_> = targets(settings, &big, false)?.into_iter().filter(|t| t.0 == "hard").collect();
            for (tag, cfg) in [("large-linear", &check.linear), ("nonlinear", &check.nonlinear)] {
                for mut r in decode(model, &big, &hard_only, cfg, &rng.child_named(tag))? {
                    m.insert(format!("{tag}/{}", r.feature), r.best_val_accuracy);
                    r.feature = format!("{tag}/{}", r.feature);
                    record.decode.push(r);
                }
            }
        }
    }

    if let Some(d) = &settings.dynamics {
        let wanted = targets(settings, &sets, false)?;
        for (epoch, snap) in &outcome.snapshots {
            let mut metrics = std::collections::BTreeMap::new();
            let (easy, hard) = reliance_pair(settings, snap, easy_predictivity, &condition, seed)?;
            metrics.insert("reliance/easy".to_string(), easy);
            metrics.insert("reliance/hard".to_string(), hard);
            if d.decode_epochs.contains(epoch) {
                let snap_rng = rng.child_named("snapshot").child(*epoch as u64);
                for r in decode(snap, &sets, &wanted, &settings.decoder, &snap_rng)? {
                    metrics.insert(format!("decode/{}", r.feature), r.best_val_accuracy);
                }
            }
            record.series.push(SeriesPoint { epoch: *epoch, metrics });
        }
    }
    Ok(())
}

/// Shared similarity stimuli: inputs with both features at chance.
pub fn similarity_stimuli(settings: &BinarySettings) -> Result<BinaryDataset> {
    let s = &settings.similarity;
    sample_dataset(
        &spec(settings, 0.5, 0.5, s.n_stimuli, s.stimulus_seed),
        &mut Rng::seed_from(s.stimulus_seed).child_named("similarity-stimuli"),
    )
}

/// All pairwise similarity scores between the given runs.
pub fn binary_similarity(settings: &BinarySettings, runs: &[(Condition, u64, Mlp)]) -> Result<Vec<SimilarityScore>> {
    let stimuli = similarity_stimuli(settings)?;
    let (x, ids) = (stimuli.inputs(), stimuli.ids());
    let probe = settings.similarity.probe.as_str();
    let acts = runs
        .iter()
        .map(|(c, s, m)| Ok(capture(m, &run_id(c, *s), &x, &ids, &[probe])?.remove(0)))
        .collect::<Result<Vec<_>>>()?;
    pairwise_scores(&acts, settings.similarity.method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentKind};

    fn quick() -> BinarySettings {
        let mut s = BinarySettings::default();
        s.training.epochs = 20;
        s.decoder = BinaryDecoderConfig::linear().with_epochs(50);
        s.n_eval = 64;
        s.n_train = 64;
        s
    }

    #[test]
    fn evaluation_fills_expected_metrics() {
        let s = quick();
        let cfg = ExperimentConfig::preset(ExperimentKind::BinaryTradeoff);
        let c = Condition::Binary { easy_predictivity: 0.5 };
        let out = train_binary(&s, &c, 1).unwrap();
        let mut r = RunRecord::new(&cfg, &c, 1);
        evaluate_binary(&s, &out, &mut r).unwrap();
        for k in ["reliance/easy", "reliance/hard", "decode/easy", "decode/hard", "decode/unit5", "decode/unit25", "train_accuracy"] {
            assert!(r.metric(k).is_some(), "{k}");
        }
    }

    #[test]
    fn conditions_share_initial_weights() {
        let s = quick();
        let a = initial_model(&s, &Condition::Binary { easy_predictivity: 0.5 }, 4).unwrap();
        let b = initial_model(&s, &Condition::Binary { easy_predictivity: 1.0 }, 4).unwrap();
        assert_eq!(a, b);
        let mt = initial_model(&s, &Condition::Multitask, 4).unwrap();
        assert_eq!(mt.output_width(), 2);
    }

    #[test]
    fn snapshots_feed_the_series() {
        let mut s = quick();
        s.dynamics = Some(crate::config::DynamicsSettings {
            snapshot_every: 10,
            decode_epochs: vec![0],
        });
        let c = Condition::Binary { easy_predictivity: 0.65 };
        let out = train_binary(&s, &c, 2).unwrap();
        let mut r = RunRecord::new(&ExperimentConfig::preset(ExperimentKind::BinaryDynamics), &c, 2);
        evaluate_binary(&s, &out, &mut r).unwrap();
        assert_eq!(r.series.iter().map(|p| p.epoch).collect::<Vec<_>>(), vec![0, 10, 20]);
        assert!(r.series[0].metrics.contains_key("decode/easy"));
        assert!(!r.series[1].metrics.contains_key("decode/easy"));
    }
}
