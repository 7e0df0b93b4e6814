//! Run records and the on-disk layout of an experiment.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use featlab_core::{Error, Result};
use featlab_data::{FeaturePair, VisualFeature};
use featlab_probes::DecodeReport;
use featlab_repsim::SimilarityScore;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};

/// One cell of an experiment's design, run once per seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Condition {
    Binary { easy_predictivity: f64 },
    Multitask,
    Untrained,
    Vision {
        target: VisualFeature,
        pair: Option<FeaturePair>,
        probability: Option<f64>,
    },
    Navon { target: VisualFeature },
}

fn pair_name(p: FeaturePair) -> &'static str {
    match p {
        FeaturePair::ShapeColor => "shape-color",
        FeaturePair::ShapeTexture => "shape-texture",
    }
}

impl Condition {
    /// File-name safe label, unique within an experiment.
    pub fn label(&self) -> String {
        match self {
            Condition::Binary { easy_predictivity } => format!("easy-{easy_predictivity:.4}"),
            Condition::Multitask => "multitask".into(),
            Condition::Untrained => "untrained".into(),
            Condition::Vision { target, pair, probability } => {
                let mut s = format!("target-{}", target.name());
                if let Some(pair) = pair {
                    s.push_str(&format!("_pair-{}", pair_name(*pair)));
                }
                if let Some(p) = probability {
                    s.push_str(&format!("_p-{p:.4}"));
                }
                s
            }
            Condition::Navon { target } => format!("navon-{}", target.name()),
        }
    }

    /// Position on a plot's x axis, where there is one.
    pub fn x(&self) -> Option<f64> {
        match self {
            Condition::Binary { easy_predictivity } => Some(*easy_predictivity),
            Condition::Vision { probability, .. } => *probability,
            _ => None,
        }
    }
}

/// Every condition of `cfg`, in report order.
pub fn conditions(cfg: &ExperimentConfig) -> Result<Vec<Condition>> {
    let binary = |ps: &[f64]| -> Vec<Condition> {
        ps.iter()
            .map(|&p| Condition::Binary { easy_predictivity: p })
            .collect()
    };
    Ok(match cfg.kind {
        ExperimentKind::BinaryTradeoff | ExperimentKind::BinaryDynamics => binary(&cfg.binary()?.easy_predictivities),
        ExperimentKind::BinaryRsa => {
            let b = cfg.binary()?;
            let mut c = binary(&b.easy_predictivities);
            if b.multitask {
                c.push(Condition::Multitask);
            }
            c.push(Condition::Untrained);
            c
        }
        ExperimentKind::VisionEnhancement => cfg
            .vision()?
            .targets
            .iter()
            .map(|&t| Condition::Vision {
                target: t,
                pair: None,
                probability: None,
            })
            .collect(),
        ExperimentKind::VisionRsa => {
            let mut c: Vec<Condition> = cfg
                .vision()?
                .targets
                .iter()
                .map(|&t| Condition::Vision {
                    target: t,
                    pair: None,
                    probability: None,
                })
                .collect();
            c.push(Condition::Untrained);
            c
        }
        ExperimentKind::VisionRedundant => cfg
            .vision()?
            .pairs
            .iter()
            .map(|&pair| Condition::Vision {
                target: pair.features().0,
                pair: Some(pair),
                probability: Some(1.0),
            })
            .collect(),
        ExperimentKind::VisionCorrelated => cfg
            .vision()?
            .correlations
            .iter()
            .flat_map(|c| {
                c.probabilities.iter().map(move |&p| Condition::Vision {
                    target: c.target,
                    pair: Some(c.pair),
                    probability: Some(p),
                })
            })
            .collect(),
        ExperimentKind::Navon => cfg.navon()?.targets.iter().map(|&t| Condition::Navon { target: t }).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub epoch: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub condition: Condition,
    pub seed: u64,
    /// Relative to the experiment directory.
    pub checkpoint: Option<String>,
    pub metrics: BTreeMap<String, f64>,
    pub decode: Vec<DecodeReport>,
    pub series: Vec<SeriesPoint>,
    pub similarity: Vec<SimilarityScore>,
    pub diverged: Option<String>,
    pub wall_clock_secs: f64,
}

impl RunRecord {
    pub fn new(cfg: &ExperimentConfig, condition: &Condition, seed: u64) -> RunRecord {
        RunRecord {
            experiment: cfg.name.clone(),
            kind: cfg.kind,
            config_hash: cfg.content_hash(),
            condition: condition.clone(),
            seed,
            checkpoint: None,
            metrics: BTreeMap::new(),
            decode: Vec::new(),
            series: Vec::new(),
            similarity: Vec::new(),
            diverged: None,
            wall_clock_secs: 0.0,
        }
    }

    pub fn id(&self) -> String {
        run_id(&self.condition, self.seed)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    /// Equal in everything except timing.
    pub fn same_results(&self, other: &RunRecord) -> bool {
        let mut a = self.clone();
        a.wall_clock_secs = other.wall_clock_secs;
        &a == other
    }
}

pub fn run_id(condition: &Condition, seed: u64) -> String {
    format!("{}__s{seed}", condition.label())
}

/// Directory layout of one experiment under an output root.
#[derive(Clone, Debug)]
pub struct Store {
    pub root: PathBuf,
    pub config_hash: String,
}

impl Store {
    pub fn new(out: &Path, cfg: &ExperimentConfig) -> Store {
        let hash = cfg.content_hash();
        Store {
            root: out.join(format!("{}-{}", cfg.name, &hash[..12])),
            config_hash: hash,
        }
    }

    pub fn records_dir(&self) -> PathBuf {
        self.root.join("records")
    }

    pub fn checkpoints_dir(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn record_path(&self, id: &str) -> PathBuf {
        self.records_dir().join(format!("{id}.json"))
    }

    /// A record written by this exact configuration, if any.
    pub fn existing(&self, id: &str) -> Result<Option<RunRecord>> {
        let path = self.record_path(id);
        if !path.exists() {
            return Ok(None);
        }
        let r: RunRecord = serde_json::from_str(&fs::read_to_string(&path)?)?;
        Ok((r.config_hash == self.config_hash).then_some(r))
    }

    /// Writes `r` unless a record for the same run already exists.
    pub fn write_record(&self, r: &RunRecord) -> Result<PathBuf> {
        if r.config_hash != self.config_hash {
            return Err(Error::config("record belongs to a different configuration"));
        }
        fs::create_dir_all(self.records_dir())?;
        let path = self.record_path(&r.id());
        if path.exists() {
            return Ok(path);
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(r)?)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn read_records(&self) -> Result<Vec<RunRecord>> {
        let dir = self.records_dir();
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
        paths.sort();
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            let r: RunRecord = serde_json::from_str(&fs::read_to_string(&p)?)?;
            if r.config_hash == self.config_hash {
                out.push(r);
            }
        }
        Ok(out)
    }

    /// Record ids in run order; written once by the caller's thread.
    pub fn write_index(&self, cfg: &ExperimentConfig, ids: &[String]) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        let index = serde_json::json!({
            "experiment": cfg.name,
            "kind": cfg.kind,
            "config_hash": self.config_hash,
            "records": ids,
        });
        fs::write(self.root.join("index.json"), serde_json::to_string_pretty(&index)?)?;
        cfg.save(&self.root.join("config.json"))
    }
}
