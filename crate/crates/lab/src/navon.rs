//! Runs on Navon figures: train on the large or the small letter, decode both.

use featlab_core::{Error, Matrix, Result};
use featlab_data::image::to_matrix;
use featlab_data::navon::{enumerate, render_item};
use featlab_data::{normalization_stats, ChannelStats, NavonItem, VisualFeature};
use featlab_nets::{train, Cnn, CnnSpec, Labels, TrainData, TrainOutcome};

use crate::config::NavonSettings;
use crate::record::{Condition, RunRecord};
use crate::vision::{decode_battery, run_rng, FeatureSets};

fn class(item: &NavonItem, f: VisualFeature) -> usize {
    match f {
        VisualFeature::Texture => item.texture,
        _ => item.shape,
    }
}

pub fn render(settings: &NavonSettings, items: &[NavonItem]) -> Result<Matrix> {
    let images = items
        .iter()
        .map(|it| render_item(it, &settings.dataset))
        .collect::<Result<Vec<_>>>()?;
    to_matrix(&images)
}

pub fn spec(settings: &NavonSettings) -> CnnSpec {
    let s = settings.dataset.image_size;
    let mut spec = CnnSpec::standard(s, s, settings.dataset.n_letters);
    spec.conv_channels = settings.conv_channels.clone();
    spec.fc_widths = settings.fc_widths;
    spec
}

fn target(condition: &Condition) -> Result<VisualFeature> {
    match condition {
        Condition::Navon { target } => Ok(*target),
        _ => Err(Error::config(format!("{} is not a navon condition", condition.label()))),
    }
}

/// `(train, val)` items of a run.
pub fn split(settings: &NavonSettings, condition: &Condition, seed: u64) -> Result<(Vec<NavonItem>, Vec<NavonItem>)> {
    let mut items = enumerate(&settings.dataset)?;
    run_rng(condition, seed).child_named("split").shuffle(&mut items);
    let n_val = ((items.len() as f64) * settings.val_fraction).round() as usize;
    let train = items.split_off(n_val);
    Ok((train, items))
}

pub struct NavonTraining {
    pub outcome: TrainOutcome<Cnn>,
    pub stats: ChannelStats,
}

pub fn train_navon(settings: &NavonSettings, condition: &Condition, seed: u64) -> Result<NavonTraining> {
    let t = target(condition)?;
    let (tr, va) = split(settings, condition, seed)?;
    let mut xtr = render(settings, &tr)?;
    let stats = normalization_stats(&xtr)?;
    stats.apply(&mut xtr);
    let mut xva = render(settings, &va)?;
    stats.apply(&mut xva);
    let n = settings.dataset.n_letters;
    let labels = |items: &[NavonItem]| Labels::classes(items.iter().map(|i| class(i, t)).collect(), n);
    let ids = |items: &[NavonItem]| items.iter().map(|i| i.id).collect::<Vec<_>>();
    let data = TrainData::with_ids(xtr, labels(&tr)?, ids(&tr))?;
    let val = TrainData::with_ids(xva, labels(&va)?, ids(&va))?;
    let mut config = settings.training.clone();
    config.seed = run_rng(condition, seed).child_named("train").seed();
    let outcome = train(Cnn::init(spec(settings), seed)?, &data, Some(&val), &config)?;
    Ok(NavonTraining { outcome, stats })
}

pub fn evaluate_navon(settings: &NavonSettings, training: &NavonTraining, record: &mut RunRecord) -> Result<()> {
    let history = &training.outcome.history;
    if let Some(reason) = &history.diverged {
        record.diverged = Some(reason.clone());
        return Ok(());
    }
    if let Some(v) = history.selected_val_accuracy {
        record.metrics.insert("val_accuracy".into(), v);
    }
    let d = &settings.decode;
    let rng = run_rng(&record.condition, record.seed).child_named("decoders");
    let all = enumerate(&settings.dataset)?;
    if d.n_train + d.n_val > all.len() {
        return Err(Error::config(format!("{} navon items cannot supply {} + {} decoding examples", all.len(), d.n_train, d.n_val)));
    }
    let mut sets = Vec::with_capacity(d.features.len());
    for &f in &d.features {
        let mut items = all.clone();
        rng.child_named(&format!("sets/{}", f.name())).shuffle(&mut items);
        let (tr, va) = (&items[..d.n_train], &items[d.n_train..d.n_train + d.n_val]);
        sets.push(FeatureSets {
            feature: f,
            n_classes: settings.dataset.n_letters,
            train: render(settings, tr)?,
            val: render(settings, va)?,
            train_labels: tr.iter().map(|i| class(i, f)).collect(),
            val_labels: va.iter().map(|i| class(i, f)).collect(),
        });
    }
    let untrained = Cnn::init(spec(settings), record.seed)?;
    decode_battery(d, &training.outcome.model, &untrained, &training.stats, &sets, &rng, record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentKind};

    #[test]
    fn split_covers_every_item_once() {
        let s = NavonSettings::default();
        let c = Condition::Navon { target: VisualFeature::Shape };
        let (tr, va) = split(&s, &c, 1).unwrap();
        assert_eq!(tr.len() + va.len(), 3250);
        assert_eq!(va.len(), 650);
        let mut ids: Vec<u64> = tr.iter().chain(&va).map(|i| i.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 3250);
    }

    #[test]
    fn tiny_navon_run() {
        let mut s = NavonSettings::default();
        s.dataset.n_letters = 4;
        s.dataset.positions = 2;
        s.conv_channels = vec![2, 2, 2];
        s.fc_widths = [8, 8];
        s.training.epochs = 1;
        s.decode.n_train = 12;
        s.decode.n_val = 12;
        s.decode.grid.epochs = 2;
        s.decode.grid.learning_rates = vec![1e-2];
        s.decode.grid.weight_decays = vec![0.0];
        let c = Condition::Navon { target: VisualFeature::Texture };
        let t = train_navon(&s, &c, 0).unwrap();
        let mut r = RunRecord::new(&ExperimentConfig::preset(ExperimentKind::Navon), &c, 0);
        evaluate_navon(&s, &t, &mut r).unwrap();
        assert!(r.metric("enhancement/fc2/shape").is_some());
        assert!(r.metric("enhancement/fc2/texture").is_some());
    }
}
