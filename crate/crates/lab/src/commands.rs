//! The CLI subcommands as library calls.

use std::fs;
use std::path::{Path, PathBuf};

use featlab_core::{Error, Result};
use featlab_data::navon::{enumerate, render_item};
use featlab_data::trifeature::render_entry;
use featlab_data::Feature;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::record::{Condition, RunRecord, Store};
use crate::report::{build_report, write_report, ResultsTable};
use crate::runner::{jobs, Context};
use crate::{binary, navon, vision};

/// Where and how a command runs.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub workers: usize,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> RunOptions {
        RunOptions {
            out: out.into(),
            seed: None,
            workers: 1,
        }
    }
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    pool.install(f)
}

fn writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-test");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub run: String,
    pub files: Vec<String>,
    pub n_train: usize,
    pub n_val: usize,
    /// Example ids in file order.
    pub ids: Vec<u64>,
    pub match_rates: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenManifest {
    pub experiment: String,
    pub config_hash: String,
    pub datasets: Vec<DatasetEntry>,
}

/// Writes every run's training data with a manifest. A manifest identical
/// to the existing one leaves the directory untouched.
pub fn cmd_gen(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<GenManifest> {
    cfg.validate()?;
    let store = Store::new(&opts.out, cfg);
    let dir = store.data_dir();
    writable(&opts.out)?;
    let manifest_path = dir.join("manifest.json");
    let ctx = Context::new(cfg)?;
    let mut datasets = Vec::new();
    let mut pending: Vec<Box<dyn FnOnce() -> Result<()>>> = Vec::new();
    for job in jobs(cfg, opts.seed)? {
        let id = job.id();
        match cfg.kind {
            k if k.is_binary() => {
                if job.condition == Condition::Untrained {
                    continue;
                }
                let (ds, _) = binary::train_set(cfg.binary()?, &job.condition, job.seed)?;
                let rates = [Feature::Easy, Feature::Hard]
                    .iter()
                    .map(|&f| (f.name().to_string(), ds.match_rate(f)))
                    .collect();
                datasets.push(DatasetEntry {
                    run: id.clone(),
                    files: vec![format!("{id}.json"), format!("{id}.bin")],
                    n_train: ds.len(),
                    n_val: 0,
                    ids: ds.ids(),
                    match_rates: rates,
                });
                let d = dir.clone();
                pending.push(Box::new(move || ds.write(&d, &id)));
            }
            ExperimentKind::Navon => {
                let s = cfg.navon()?.clone();
                let (tr, va) = navon::split(&s, &job.condition, job.seed)?;
                let preview: Vec<_> = tr.iter().take(s.png_preview).copied().collect();
                let mut files = vec![format!("{id}.json")];
                files.extend((0..preview.len()).map(|k| format!("{id}/{k:04}.png")));
                datasets.push(DatasetEntry {
                    run: id.clone(),
                    files,
                    n_train: tr.len(),
                    n_val: va.len(),
                    ids: tr.iter().chain(&va).map(|i| i.id).collect(),
                    match_rates: Vec::new(),
                });
                let d = dir.clone();
                pending.push(Box::new(move || {
                    fs::write(d.join(format!("{id}.json")), serde_json::to_string_pretty(&(&tr, &va))?)?;
                    fs::create_dir_all(d.join(&id))?;
                    for (k, item) in preview.iter().enumerate() {
                        render_item(item, &s.dataset)?.write_png(&d.join(&id).join(format!("{k:04}.png")))?;
                    }
                    Ok(())
                }));
            }
            _ if job.condition == Condition::Untrained => continue,
            _ => {
                let s = cfg.vision()?.clone();
                let pool = ctx.pool()?;
                let m = vision::split_for(&s, pool, &job.condition, job.seed)?;
                let mut rates = Vec::new();
                if let Some(r) = m.match_rate(pool, &m.train) {
                    rates.push(("train".to_string(), r));
                }
                if let Some(r) = m.match_rate(pool, &m.val) {
                    rates.push(("val".to_string(), r));
                }
                let preview: Vec<_> = m.train.iter().take(s.png_preview).map(|&i| pool[i as usize]).collect();
                let mut files = vec![format!("{id}.json")];
                files.extend((0..preview.len()).map(|k| format!("{id}/{k:04}.png")));
                datasets.push(DatasetEntry {
                    run: id.clone(),
                    files,
                    n_train: m.train.len(),
                    n_val: m.val.len(),
                    ids: m.train.iter().chain(&m.val).copied().collect(),
                    match_rates: rates,
                });
                let d = dir.clone();
                pending.push(Box::new(move || {
                    m.write(&d.join(format!("{id}.json")))?;
                    fs::create_dir_all(d.join(&id))?;
                    for (k, e) in preview.iter().enumerate() {
                        render_entry(e, &s.dataset)?.write_png(&d.join(&id).join(format!("{k:04}.png")))?;
                    }
                    Ok(())
                }));
            }
        }
    }
    let manifest = GenManifest {
        experiment: cfg.name.clone(),
        config_hash: store.config_hash.clone(),
        datasets,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    if fs::read_to_string(&manifest_path).is_ok_and(|old| old == text) {
        return Ok(manifest);
    }
    fs::create_dir_all(&dir)?;
    for w in pending {
        w()?;
    }
    if cfg.kind == ExperimentKind::Navon {
        let items = enumerate(&cfg.navon()?.dataset)?;
        fs::write(dir.join("items.json"), serde_json::to_string(&items)?)?;
    } else if !cfg.kind.is_binary() {
        fs::write(dir.join("pool.json"), serde_json::to_string(ctx.pool()?)?)?;
    }
    fs::write(&manifest_path, text)?;
    Ok(manifest)
}

/// Trains and checkpoints every run that has no checkpoint yet.
pub fn cmd_train(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<()> {
    let ctx = Context::new(cfg)?;
    let store = Store::new(&opts.out, cfg);
    writable(&store.root)?;
    let jobs = jobs(cfg, opts.seed)?;
    in_pool(opts.workers, || ctx.train_stage(&store, &jobs))
}

/// Evaluates existing checkpoints into run records.
pub fn cmd_decode(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<RunRecord>> {
    let ctx = Context::new(cfg)?;
    let store = Store::new(&opts.out, cfg);
    let jobs = jobs(cfg, opts.seed)?;
    in_pool(opts.workers, || ctx.record_stage(&store, &jobs, false))
}

/// Similarity analysis over existing checkpoints.
pub fn cmd_rsa(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<RunRecord>> {
    if !cfg.kind.is_rsa() {
        return Err(Error::config(format!("{} is not a similarity experiment", cfg.kind.name())));
    }
    cmd_decode(cfg, opts)
}

/// Trains what is missing, evaluates what has no record, and rewrites the
/// results index. Diverged runs are recorded and do not stop the sweep.
pub fn cmd_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<RunRecord>> {
    let ctx = Context::new(cfg)?;
    let store = Store::new(&opts.out, cfg);
    writable(&store.root)?;
    let jobs = jobs(cfg, opts.seed)?;
    let records = in_pool(opts.workers, || ctx.record_stage(&store, &jobs, true))?;
    let mut ids: Vec<String> = store.read_records()?.iter().map(RunRecord::id).collect();
    ids.sort();
    store.write_index(cfg, &ids)?;
    Ok(records)
}

/// Builds and writes the named report (the experiment's default when
/// `None`) from the records on disk.
pub fn cmd_report(cfg: &ExperimentConfig, out: &Path, report: Option<&str>) -> Result<(ResultsTable, Vec<PathBuf>)> {
    cfg.validate()?;
    let store = Store::new(out, cfg);
    let records = store.read_records()?;
    let table = build_report(cfg, &records, report.unwrap_or(cfg.kind.default_report()))?;
    let paths = write_report(&store.reports_dir(), &table)?;
    Ok((table, paths))
}
