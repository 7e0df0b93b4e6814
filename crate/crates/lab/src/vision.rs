//! Runs on rendered images: enhancement, redundant and correlated splits,
//! and similarity between trained networks.

use std::collections::BTreeMap;

use featlab_core::{Error, Matrix, Result, Rng};
use featlab_data::trifeature::render_matrix;
use featlab_data::{
    build_pool, decode_split, normalization_stats, rsa_probe_set, sample_split, ChannelStats, CorrelationSpec, PoolEntry,
    SplitConfig, SplitManifest, VisualFeature,
};
use featlab_nets::{capture, train, Cnn, Labels, TrainData, TrainOutcome};
use featlab_probes::{enhancement_score, train_linear_decoder_grid, DecodeData};
use featlab_repsim::{pairwise_scores, SimilarityScore};

use crate::config::{DecodeSettings, UntrainedInputs, VisionSettings};
use crate::record::{run_id, Condition, RunRecord};

pub(crate) fn run_rng(condition: &Condition, seed: u64) -> Rng {
    Rng::seed_from(seed).child_named(&condition.label())
}

/// Pool metadata for the configured dataset; pixels are rendered on demand.
pub fn pool(settings: &VisionSettings) -> Result<Vec<PoolEntry>> {
    let pool = build_pool(&settings.dataset)?;
    if pool.iter().enumerate().any(|(i, e)| e.id != i as u64) {
        return Err(Error::config("pool ids must equal their positions"));
    }
    Ok(pool)
}

pub fn split_config(settings: &VisionSettings, condition: &Condition) -> Result<SplitConfig> {
    let Condition::Vision { target, pair, probability } = condition else {
        return Err(Error::config(format!("{} is not a vision condition", condition.label())));
    };
    let correlation = match (pair, probability) {
        (Some(pair), Some(p)) => Some(CorrelationSpec {
            pair: *pair,
            conditional_match_probability: *p,
        }),
        (None, None) => None,
        _ => return Err(Error::config("a correlated condition needs both a pair and a probability")),
    };
    let cfg = SplitConfig {
        target: *target,
        n_train: settings.n_train,
        n_val: settings.n_val,
        held_out_per_feature: settings.held_out_per_feature,
        correlation,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn split_for(settings: &VisionSettings, pool: &[PoolEntry], condition: &Condition, seed: u64) -> Result<SplitManifest> {
    let cfg = split_config(settings, condition)?;
    sample_split(pool, &cfg, &mut run_rng(condition, seed).child_named("split"))
}

pub fn render(settings: &VisionSettings, pool: &[PoolEntry], ids: &[u64]) -> Result<Matrix> {
    let entries: Vec<PoolEntry> = ids.iter().map(|&id| pool[id as usize]).collect();
    render_matrix(&entries, &settings.dataset)
}

fn normalized(mut x: Matrix, stats: &ChannelStats) -> Matrix {
    stats.apply(&mut x);
    x
}

/// Per-channel statistics of a run's training images.
pub fn training_stats(settings: &VisionSettings, pool: &[PoolEntry], manifest: &SplitManifest) -> Result<ChannelStats> {
    normalization_stats(&render(settings, pool, &manifest.train)?)
}

pub fn initial_model(settings: &VisionSettings, seed: u64) -> Result<Cnn> {
    Cnn::init(settings.cnn_spec(featlab_data::trifeature::N_CLASSES - settings.held_out_per_feature), seed)
}

pub struct VisionTraining {
    pub outcome: TrainOutcome<Cnn>,
    pub manifest: SplitManifest,
    pub stats: ChannelStats,
}

pub fn train_vision(settings: &VisionSettings, pool: &[PoolEntry], condition: &Condition, seed: u64) -> Result<VisionTraining> {
    let manifest = split_for(settings, pool, condition, seed)?;
    let mut xtr = render(settings, pool, &manifest.train)?;
    let stats = normalization_stats(&xtr)?;
    stats.apply(&mut xtr);
    let xva = normalized(render(settings, pool, &manifest.val)?, &stats);
    let n_classes = manifest.config.in_train_count();
    let data = TrainData::with_ids(xtr, Labels::classes(manifest.labels(pool, &manifest.train)?, n_classes)?, manifest.train.clone())?;
    let val = TrainData::with_ids(xva, Labels::classes(manifest.labels(pool, &manifest.val)?, n_classes)?, manifest.val.clone())?;
    let mut config = settings.training.clone();
    config.seed = run_rng(condition, seed).child_named("train").seed();
    let outcome = train(initial_model(settings, seed)?, &data, Some(&val), &config)?;
    Ok(VisionTraining { outcome, manifest, stats })
}

/// One feature's decoding sets, rendered but not normalized.
pub(crate) struct FeatureSets {
    pub feature: VisualFeature,
    pub n_classes: usize,
    pub train: Matrix,
    pub val: Matrix,
    pub train_labels: Vec<usize>,
    pub val_labels: Vec<usize>,
}

/// Decodes each feature from trained and untrained models at every probe
/// and records decodability and enhancement.
pub(crate) fn decode_battery(
    decode: &DecodeSettings,
    trained: &Cnn,
    untrained: &Cnn,
    stats: &ChannelStats,
    sets: &[FeatureSets],
    rng: &Rng,
    record: &mut RunRecord,
) -> Result<()> {
    let probes: Vec<&str> = decode.probes.iter().map(String::as_str).collect();
    for set in sets {
        let f = set.feature.name();
        let (ntr, nva) = (normalized(set.train.clone(), stats), normalized(set.val.clone(), stats));
        let (utr, uva) = match decode.untrained_inputs {
            UntrainedInputs::Normalized => (ntr.clone(), nva.clone()),
            UntrainedInputs::Raw => (set.train.clone(), set.val.clone()),
        };
        let ids_tr: Vec<u64> = (0..ntr.rows() as u64).collect();
        let ids_va: Vec<u64> = (0..nva.rows() as u64).collect();
        let acts = |m: &Cnn, x: &Matrix, ids: &[u64]| capture(m, "m", x, ids, &probes);
        let (ttr, tva) = (acts(trained, &ntr, &ids_tr)?, acts(trained, &nva, &ids_va)?);
        let (u0tr, u0va) = (acts(untrained, &utr, &ids_tr)?, acts(untrained, &uva, &ids_va)?);
        for (k, probe) in probes.iter().enumerate() {
            let mut reports = Vec::with_capacity(2);
            for (which, tr, va) in [("trained", &ttr, &tva), ("untrained", &u0tr, &u0va)] {
                let train_set = DecodeData::new(tr[k].values.clone(), set.train_labels.clone())?;
                let val_set = DecodeData::new(va[k].values.clone(), set.val_labels.clone())?;
                let mut r = rng.child_named(&format!("{which}/{probe}/{f}"));
                let report = train_linear_decoder_grid(&train_set, &val_set, set.n_classes, &decode.grid, &mut r)?.named(f, probe);
                record.metrics.insert(format!("decode/{probe}/{f}/{which}"), report.best_val_accuracy);
                reports.push(report);
            }
            record
                .metrics
                .insert(format!("enhancement/{probe}/{f}"), enhancement_score(&reports[0], &reports[1])?);
            record.decode.extend(reports);
        }
    }
    Ok(())
}

fn class_labels(pool: &[PoolEntry], manifest: &SplitManifest, f: VisualFeature, ids: &[u64]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|&id| {
            manifest
                .class_index(f, pool[id as usize].class(f))
                .ok_or_else(|| Error::config(format!("example {id} has a held-out {} class", f.name())))
        })
        .collect()
}

pub fn evaluate_vision(
    settings: &VisionSettings,
    pool: &[PoolEntry],
    training: &VisionTraining,
    record: &mut RunRecord,
) -> Result<()> {
    let history = &training.outcome.history;
    if let Some(reason) = &history.diverged {
        record.diverged = Some(reason.clone());
        return Ok(());
    }
    let manifest = &training.manifest;
    let m = &mut record.metrics;
    if let Some(v) = history.selected_val_accuracy {
        m.insert("val_accuracy".into(), v);
    }
    m.insert("selected_epoch".into(), history.selected_epoch as f64);
    if let Some(rate) = manifest.match_rate(pool, &manifest.train) {
        m.insert("match_rate/train".into(), rate);
    }
    let rng = run_rng(&record.condition, record.seed).child_named("decoders");
    let d = &settings.decode;
    let mut sets = Vec::with_capacity(d.features.len());
    for &f in &d.features {
        let (tr, va) = decode_split(pool, manifest, f, d.n_train, d.n_val, &mut rng.child_named(&format!("sets/{}", f.name())))?;
        sets.push(FeatureSets {
            feature: f,
            n_classes: manifest.config.in_train_count(),
            train: render(settings, pool, &tr)?,
            val: render(settings, pool, &va)?,
            train_labels: class_labels(pool, manifest, f, &tr)?,
            val_labels: class_labels(pool, manifest, f, &va)?,
        });
    }
    let untrained = initial_model(settings, record.seed)?;
    decode_battery(d, &training.outcome.model, &untrained, &training.stats, &sets, &rng, record)
}

/// Similarity stimuli: a fixed number of renditions of every combination.
pub fn similarity_stimuli(settings: &VisionSettings, pool: &[PoolEntry]) -> Result<(Matrix, Vec<u64>)> {
    let s = &settings.similarity;
    let entries = rsa_probe_set(pool, s.per_combo, &mut Rng::seed_from(s.stimulus_seed).child_named("similarity-stimuli"))?;
    let ids: Vec<u64> = entries.iter().map(|e| e.id).collect();
    Ok((render_matrix(&entries, &settings.dataset)?, ids))
}

/// Pairwise similarity between runs; each model sees the stimuli under
/// its own input statistics, untrained ones under those of the stimuli.
pub fn vision_similarity(
    settings: &VisionSettings,
    pool: &[PoolEntry],
    runs: &[(Condition, u64, Cnn, Option<ChannelStats>)],
) -> Result<Vec<SimilarityScore>> {
    let (x, ids) = similarity_stimuli(settings, pool)?;
    let own = normalization_stats(&x)?;
    let probe = settings.similarity.probe.as_str();
    let mut acts = Vec::with_capacity(runs.len());
    for (c, seed, model, stats) in runs {
        let xs = match (stats, settings.decode.untrained_inputs) {
            (Some(s), _) => normalized(x.clone(), s),
            (None, UntrainedInputs::Normalized) => normalized(x.clone(), &own),
            (None, UntrainedInputs::Raw) => x.clone(),
        };
        acts.push(capture(model, &run_id(c, *seed), &xs, &ids, &[probe])?.remove(0));
    }
    pairwise_scores(&acts, settings.similarity.method)
}

/// Metrics of `records` under `name`, keyed by seed.
pub fn by_seed(records: &[RunRecord], name: &str) -> BTreeMap<u64, f64> {
    records.iter().filter_map(|r| r.metric(name).map(|v| (r.seed, v))).collect()
}
