//! Executing the runs of an experiment, in memory or against a [`Store`].

use std::path::Path;
use std::time::Instant;

use featlab_core::{Error, Result};
use featlab_data::PoolEntry;
use featlab_nets::checkpoint::{self, Architecture};
use featlab_nets::{Cnn, History, Mlp, TrainOutcome};
use featlab_repsim::SimilarityScore;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::record::{conditions, run_id, Condition, RunRecord, Store};
use crate::{binary, navon, vision};

#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub condition: Condition,
    pub seed: u64,
}

impl Job {
    pub fn id(&self) -> String {
        run_id(&self.condition, self.seed)
    }
}

/// Every `(condition, seed)` of `cfg`, condition-major; `seed` keeps one.
pub fn jobs(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<Vec<Job>> {
    if let Some(s) = seed {
        if !cfg.seeds.contains(&s) {
            return Err(Error::config(format!("seed {s} is not listed in the configuration")));
        }
    }
    let seeds: Vec<u64> = cfg.seeds.iter().copied().filter(|s| seed.is_none_or(|x| x == *s)).collect();
    Ok(conditions(cfg)?
        .into_iter()
        .flat_map(|c| seeds.iter().map(move |&s| Job { condition: c.clone(), seed: s }))
        .collect())
}

/// A trained (or deliberately untrained) model with what evaluation needs.
pub enum Trained {
    Binary(TrainOutcome<Mlp>),
    Vision(vision::VisionTraining),
    /// Untrained similarity baseline; no split, no statistics.
    VisionBaseline(Cnn),
    Navon(navon::NavonTraining),
}

impl Trained {
    pub fn history(&self) -> &History {
        match self {
            Trained::Binary(o) => &o.history,
            Trained::Vision(t) => &t.outcome.history,
            Trained::Navon(t) => &t.outcome.history,
            Trained::VisionBaseline(_) => {
                static EMPTY: History = History {
                    epochs: Vec::new(),
                    selected_epoch: 0,
                    selected_val_accuracy: None,
                    diverged: None,
                };
                &EMPTY
            }
        }
    }
}

/// Read-only state shared by all runs of an experiment.
pub struct Context {
    pub cfg: ExperimentConfig,
    pool: Option<Vec<PoolEntry>>,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig) -> Result<Context> {
        cfg.validate()?;
        let pool = match cfg.kind {
            k if k.is_binary() || k == ExperimentKind::Navon => None,
            _ => Some(vision::pool(cfg.vision()?)?),
        };
        Ok(Context { cfg: cfg.clone(), pool })
    }

    pub fn pool(&self) -> Result<&[PoolEntry]> {
        self.pool.as_deref().ok_or_else(|| Error::config("experiment has no image pool"))
    }

    pub fn train(&self, job: &Job) -> Result<Trained> {
        let cfg = &self.cfg;
        Ok(match (&job.condition, cfg.kind) {
            (_, k) if k.is_binary() => Trained::Binary(binary::train_binary(cfg.binary()?, &job.condition, job.seed)?),
            (Condition::Untrained, ExperimentKind::VisionRsa) => {
                Trained::VisionBaseline(vision::initial_model(cfg.vision()?, job.seed)?)
            }
            (_, ExperimentKind::Navon) => Trained::Navon(navon::train_navon(cfg.navon()?, &job.condition, job.seed)?),
            _ => Trained::Vision(vision::train_vision(cfg.vision()?, self.pool()?, &job.condition, job.seed)?),
        })
    }

    /// Per-run metrics; similarity rows are added separately.
    pub fn evaluate(&self, job: &Job, trained: &Trained) -> Result<RunRecord> {
        let cfg = &self.cfg;
        let mut record = RunRecord::new(cfg, &job.condition, job.seed);
        match trained {
            Trained::Binary(o) => binary::evaluate_binary(cfg.binary()?, o, &mut record)?,
            Trained::Vision(t) if cfg.kind == ExperimentKind::VisionRsa => {
                record.diverged = t.outcome.history.diverged.clone();
                if let Some(v) = t.outcome.history.selected_val_accuracy {
                    record.metrics.insert("val_accuracy".into(), v);
                }
            }
            Trained::Vision(t) => vision::evaluate_vision(cfg.vision()?, self.pool()?, t, &mut record)?,
            Trained::VisionBaseline(_) => {}
            Trained::Navon(t) => navon::evaluate_navon(cfg.navon()?, t, &mut record)?,
        }
        Ok(record)
    }

    /// Train and evaluate one run without touching disk.
    pub fn run(&self, job: &Job) -> Result<(RunRecord, Trained)> {
        let start = Instant::now();
        let trained = self.train(job)?;
        let mut record = self.evaluate(job, &trained)?;
        record.wall_clock_secs = start.elapsed().as_secs_f64();
        Ok((record, trained))
    }

    /// Pairwise similarity over every run of a similarity experiment.
    pub fn similarity(&self, runs: &[(Job, &Trained)]) -> Result<Vec<SimilarityScore>> {
        match self.cfg.kind {
            ExperimentKind::BinaryRsa => {
                let models = runs
                    .iter()
                    .map(|(j, t)| match t {
                        Trained::Binary(o) => Ok((j.condition.clone(), j.seed, o.model.clone())),
                        _ => Err(Error::config("binary similarity needs binary models")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                binary::binary_similarity(self.cfg.binary()?, &models)
            }
            ExperimentKind::VisionRsa => {
                let models = runs
                    .iter()
                    .map(|(j, t)| match t {
                        Trained::Vision(v) => Ok((j.condition.clone(), j.seed, v.outcome.model.clone(), Some(v.stats))),
                        Trained::VisionBaseline(m) => Ok((j.condition.clone(), j.seed, m.clone(), None)),
                        _ => Err(Error::config("vision similarity needs vision models")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                vision::vision_similarity(self.cfg.vision()?, self.pool()?, &models)
            }
            k => Err(Error::config(format!("{} is not a similarity experiment", k.name()))),
        }
    }

    /// Runs every job in memory, then adds similarity rows where the
    /// experiment calls for them. Records come back in job order.
    pub fn run_all(&self, jobs: &[Job]) -> Result<Vec<(RunRecord, Trained)>> {
        let mut out: Vec<(RunRecord, Trained)> = jobs.par_iter().map(|j| self.run(j)).collect::<Result<_>>()?;
        if self.cfg.kind.is_rsa() {
            let runs: Vec<(Job, &Trained)> = jobs.iter().cloned().zip(out.iter().map(|o| &o.1)).collect();
            let scores = self.similarity(&runs)?;
            attach_similarity(out.iter_mut().map(|o| &mut o.0), &scores);
        }
        Ok(out)
    }

    fn save_checkpoint(&self, store: &Store, job: &Job, trained: &Trained) -> Result<String> {
        let dir = store.checkpoints_dir();
        let id = job.id();
        let hist = Some(trained.history());
        match trained {
            Trained::Binary(o) => {
                let cfg = &self.cfg.binary()?.training;
                save(&dir, &id, &o.model, job.seed, Some(cfg), hist)?;
                let snap_dir = dir.join(format!("{id}-snapshots"));
                for (epoch, m) in &o.snapshots {
                    save(&snap_dir, &format!("e{epoch}"), m, job.seed, None, None)?;
                }
            }
            Trained::Vision(t) => save(&dir, &id, &t.outcome.model, job.seed, Some(&self.cfg.vision()?.training), hist)?,
            Trained::VisionBaseline(m) => save(&dir, &id, m, job.seed, None, None)?,
            Trained::Navon(t) => save(&dir, &id, &t.outcome.model, job.seed, Some(&self.cfg.navon()?.training), hist)?,
        }
        Ok(format!("checkpoints/{id}.json"))
    }

    fn checkpoint_exists(store: &Store, job: &Job) -> bool {
        store.checkpoints_dir().join(format!("{}.json", job.id())).exists()
    }

    fn load_checkpoint(&self, store: &Store, job: &Job) -> Result<Trained> {
        let dir = store.checkpoints_dir();
        let id = job.id();
        if !Self::checkpoint_exists(store, job) {
            return Err(Error::config(format!("no checkpoint for {id}; run `train` first")));
        }
        Ok(match self.cfg.kind {
            k if k.is_binary() => {
                let (model, manifest) = checkpoint::load::<Mlp>(&dir, &id)?;
                let mut snapshots = Vec::new();
                if let Some(d) = &self.cfg.binary()?.dynamics {
                    let snap_dir = dir.join(format!("{id}-snapshots"));
                    let epochs = manifest.history.as_ref().map_or(0, |h| h.epochs.len().saturating_sub(1));
                    for e in (0..=epochs).step_by(d.snapshot_every) {
                        snapshots.push((e, checkpoint::load::<Mlp>(&snap_dir, &format!("e{e}"))?.0));
                    }
                }
                Trained::Binary(TrainOutcome {
                    model,
                    history: manifest.history.unwrap_or_default(),
                    snapshots,
                })
            }
            ExperimentKind::Navon => {
                let settings = self.cfg.navon()?;
                let (model, manifest) = checkpoint::load::<Cnn>(&dir, &id)?;
                let (tr, _) = navon::split(settings, &job.condition, job.seed)?;
                let stats = featlab_data::normalization_stats(&navon::render(settings, &tr)?)?;
                Trained::Navon(navon::NavonTraining {
                    outcome: outcome(model, manifest.history),
                    stats,
                })
            }
            _ if job.condition == Condition::Untrained => Trained::VisionBaseline(checkpoint::load::<Cnn>(&dir, &id)?.0),
            _ => {
                let settings = self.cfg.vision()?;
                let (model, manifest) = checkpoint::load::<Cnn>(&dir, &id)?;
                let split = vision::split_for(settings, self.pool()?, &job.condition, job.seed)?;
                let stats = vision::training_stats(settings, self.pool()?, &split)?;
                Trained::Vision(vision::VisionTraining {
                    outcome: outcome(model, manifest.history),
                    manifest: split,
                    stats,
                })
            }
        })
    }

    /// Loads the run's checkpoint, training and saving it first if absent.
    fn obtain(&self, store: &Store, job: &Job, train_missing: bool) -> Result<(Trained, String, f64)> {
        let start = Instant::now();
        if Self::checkpoint_exists(store, job) || !train_missing {
            return Ok((self.load_checkpoint(store, job)?, format!("checkpoints/{}.json", job.id()), 0.0));
        }
        let trained = self.train(job)?;
        let path = self.save_checkpoint(store, job, &trained)?;
        Ok((trained, path, start.elapsed().as_secs_f64()))
    }

    /// Trains and checkpoints every job lacking a checkpoint.
    pub fn train_stage(&self, store: &Store, jobs: &[Job]) -> Result<()> {
        jobs.par_iter()
            .filter(|j| !Self::checkpoint_exists(store, j))
            .try_for_each(|j| self.train(j).and_then(|t| self.save_checkpoint(store, j, &t).map(|_| ())))
    }

    /// Writes a record for every job that lacks one; returns all records
    /// in job order.
    pub fn record_stage(&self, store: &Store, jobs: &[Job], train_missing: bool) -> Result<Vec<RunRecord>> {
        if self.cfg.kind.is_rsa() {
            return self.similarity_stage(store, jobs, train_missing);
        }
        jobs.par_iter()
            .map(|j| {
                if let Some(r) = store.existing(&j.id())? {
                    return Ok(r);
                }
                let (trained, path, train_secs) = self.obtain(store, j, train_missing)?;
                let start = Instant::now();
                let mut r = self.evaluate(j, &trained)?;
                r.checkpoint = Some(path);
                r.wall_clock_secs = train_secs + start.elapsed().as_secs_f64();
                store.write_record(&r)?;
                Ok(r)
            })
            .collect()
    }

    fn similarity_stage(&self, store: &Store, jobs: &[Job], train_missing: bool) -> Result<Vec<RunRecord>> {
        let existing = jobs.iter().map(|j| store.existing(&j.id())).collect::<Result<Vec<_>>>()?;
        if existing.iter().all(Option::is_some) {
            return Ok(existing.into_iter().flatten().collect());
        }
        let loaded: Vec<(Trained, String, f64)> = jobs.par_iter().map(|j| self.obtain(store, j, train_missing)).collect::<Result<_>>()?;
        let mut records = jobs
            .par_iter()
            .zip(&loaded)
            .map(|(j, (t, path, secs))| {
                let start = Instant::now();
                let mut r = self.evaluate(j, t)?;
                r.checkpoint = Some(path.clone());
                r.wall_clock_secs = secs + start.elapsed().as_secs_f64();
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        let runs: Vec<(Job, &Trained)> = jobs.iter().cloned().zip(loaded.iter().map(|l| &l.0)).collect();
        let scores = self.similarity(&runs)?;
        attach_similarity(records.iter_mut(), &scores);
        let dir = store.root.join("similarity");
        std::fs::create_dir_all(&dir)?;
        featlab_repsim::write_scores_csv(&dir.join("scores.csv"), &scores)?;
        for r in &records {
            store.write_record(r)?;
        }
        // records written earlier for the same configuration win
        jobs.iter()
            .map(|j| store.existing(&j.id())?.ok_or_else(|| Error::config(format!("record {} vanished", j.id()))))
            .collect()
    }
}

fn outcome(model: Cnn, history: Option<History>) -> TrainOutcome<Cnn> {
    TrainOutcome {
        model,
        history: history.unwrap_or_default(),
        snapshots: Vec::new(),
    }
}

fn save<N: Architecture>(
    dir: &Path,
    stem: &str,
    model: &N,
    seed: u64,
    config: Option<&featlab_nets::TrainConfig>,
    history: Option<&History>,
) -> Result<()> {
    checkpoint::save(dir, stem, model, Some(seed), config, history).map(|_| ())
}

/// Gives each record the scores it takes part in.
fn attach_similarity<'a>(records: impl Iterator<Item = &'a mut RunRecord>, scores: &[SimilarityScore]) {
    for r in records {
        let id = r.id();
        r.similarity = scores.iter().filter(|s| s.a == id || s.b == id).cloned().collect();
    }
}
