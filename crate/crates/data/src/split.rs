//! Train/validation splits with held-out classes and controlled
//! correlations between a target feature and one other feature.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use featlab_core::{Error, Result, Rng};
use serde::{Deserialize, Serialize};

use crate::trifeature::{combo_index, PoolEntry, VisualFeature, N_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturePair {
    ShapeColor,
    ShapeTexture,
}

impl FeaturePair {
    pub fn features(self) -> (VisualFeature, VisualFeature) {
        match self {
            FeaturePair::ShapeColor => (VisualFeature::Shape, VisualFeature::Color),
            FeaturePair::ShapeTexture => (VisualFeature::Shape, VisualFeature::Texture),
        }
    }

    pub fn contains(self, f: VisualFeature) -> bool {
        let (a, b) = self.features();
        a == f || b == f
    }

    /// The member of the pair that is not `f`.
    pub fn partner(self, f: VisualFeature) -> Option<VisualFeature> {
        let (a, b) = self.features();
        if f == a {
            Some(b)
        } else if f == b {
            Some(a)
        } else {
            None
        }
    }
}

/// The paired feature other than the target equals `matching(target class)`
/// with this probability, and is otherwise uniform over its remaining
/// in-train classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub pair: FeaturePair,
    pub conditional_match_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub target: VisualFeature,
    pub n_train: usize,
    pub n_val: usize,
    pub held_out_per_feature: usize,
    pub correlation: Option<CorrelationSpec>,
}

impl SplitConfig {
    /// 3430 / 3570 with no correlation: every all-in-train combination ten
    /// times for training, every combination with a held-out non-target ten
    /// times for validation.
    pub fn uncorrelated(target: VisualFeature) -> SplitConfig {
        SplitConfig {
            target,
            n_train: 3430,
            n_val: 3570,
            held_out_per_feature: 3,
            correlation: None,
        }
    }

    /// 4900 / 2100: at full correlation validation has only 21 distinct
    /// combinations, and 2100 is what a 100-rendition pool can supply.
    pub fn correlated(target: VisualFeature, pair: FeaturePair, p: f64) -> SplitConfig {
        SplitConfig {
            target,
            n_train: 4900,
            n_val: 2100,
            held_out_per_feature: 3,
            correlation: Some(CorrelationSpec {
                pair,
                conditional_match_probability: p,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.held_out_per_feature == 0 || self.held_out_per_feature >= N_CLASSES - 1 {
            return Err(Error::config("held-out class count must leave at least two in-train classes"));
        }
        if let Some(c) = &self.correlation {
            let p = c.conditional_match_probability;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::config(format!("conditional probability {p} outside (0, 1]")));
            }
            if !c.pair.contains(self.target) {
                return Err(Error::config(format!(
                    "target {} is not a member of the correlated pair",
                    self.target.name()
                )));
            }
        }
        Ok(())
    }

    pub fn in_train_count(&self) -> usize {
        N_CLASSES - self.held_out_per_feature
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub config: SplitConfig,
    /// Indexed by [`VisualFeature::index`], sorted ascending.
    pub held_out: [Vec<usize>; 3],
    pub in_train: [Vec<usize>; 3],
    /// `(target class, correlated class)` pairs of the random bijection.
    pub matching: Vec<(usize, usize)>,
    pub train: Vec<u64>,
    pub val: Vec<u64>,
}

impl SplitManifest {
    pub fn correlated_feature(&self) -> Option<VisualFeature> {
        self.config
            .correlation
            .and_then(|c| c.pair.partner(self.config.target))
    }

    pub fn third_feature(&self) -> VisualFeature {
        let corr = self.correlated_feature();
        VisualFeature::ALL
            .into_iter()
            .find(|&f| f != self.config.target && Some(f) != corr)
            .expect("three features")
    }

    /// Position of `class` among the in-train classes of `f`.
    pub fn class_index(&self, f: VisualFeature, class: usize) -> Option<usize> {
        self.in_train[f.index()].iter().position(|&c| c == class)
    }

    /// Training labels (in-train class positions of the target).
    pub fn labels(&self, pool: &[PoolEntry], ids: &[u64]) -> Result<Vec<usize>> {
        let t = self.config.target;
        ids.iter()
            .map(|&id| {
                let e = &pool[id as usize];
                self.class_index(t, e.class(t))
                    .ok_or_else(|| Error::config(format!("example {id} has a held-out target class")))
            })
            .collect()
    }

    /// Fraction of `ids` whose correlated feature equals the matched class.
    pub fn match_rate(&self, pool: &[PoolEntry], ids: &[u64]) -> Option<f64> {
        let corr = self.correlated_feature()?;
        let m: BTreeMap<usize, usize> = self.matching.iter().copied().collect();
        let hits = ids
            .iter()
            .filter(|&&id| {
                let e = &pool[id as usize];
                m.get(&e.class(self.config.target)) == Some(&e.class(corr))
            })
            .count();
        Some(hits as f64 / ids.len() as f64)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<SplitManifest> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Draws renditions without replacement per combination.
struct Draw<'a> {
    pool: &'a [PoolEntry],
    renditions: usize,
    remaining: BTreeMap<usize, Vec<usize>>,
}

impl<'a> Draw<'a> {
    fn new(pool: &'a [PoolEntry]) -> Result<Draw<'a>> {
        let combos = N_CLASSES * N_CLASSES * N_CLASSES;
        if pool.is_empty() || pool.len() % combos != 0 {
            return Err(Error::config("pool is not a full combination grid"));
        }
        Ok(Draw {
            pool,
            renditions: pool.len() / combos,
            remaining: BTreeMap::new(),
        })
    }

    fn take(&mut self, classes: [usize; 3], rng: &mut Rng) -> Result<u64> {
        let combo = combo_index(classes[0], classes[1], classes[2]);
        let r = self.renditions;
        let left = self.remaining.entry(combo).or_insert_with(|| rng.permutation(r));
        let k = left.pop().ok_or_else(|| {
            Error::config(format!(
                "pool exhausted: combination {classes:?} has only {r} renditions"
            ))
        })?;
        Ok(self.pool[combo * r + k].id)
    }
}

fn choose(rng: &mut Rng, from: &[usize]) -> usize {
    from[rng.below(from.len())]
}

/// Samples a split. Held-out classes, the matching and every example
/// come from `rng`.
///
/// Without a correlation the training set cycles through all in-train
/// combinations and validation cycles through combinations whose target is
/// in-train and at least one non-target is held out. With a correlation,
/// training draws the target uniformly (balanced), the correlated feature by
/// the conditional rule and the third feature from its in-train classes;
/// validation follows the same rule but takes the third feature from its
/// held-out classes.
pub fn sample_split(pool: &[PoolEntry], cfg: &SplitConfig, rng: &mut Rng) -> Result<SplitManifest> {
    cfg.validate()?;
    let k = cfg.held_out_per_feature;
    let mut held_out: [Vec<usize>; 3] = Default::default();
    let mut in_train: [Vec<usize>; 3] = Default::default();
    for f in 0..3 {
        let perm = rng.permutation(N_CLASSES);
        let mut h = perm[..k].to_vec();
        h.sort_unstable();
        let mut t = perm[k..].to_vec();
        t.sort_unstable();
        held_out[f] = h;
        in_train[f] = t;
    }
    let mut draw = Draw::new(pool)?;
    let target = cfg.target;
    let mut manifest = SplitManifest {
        config: cfg.clone(),
        held_out,
        in_train,
        matching: Vec::new(),
        train: Vec::new(),
        val: Vec::new(),
    };

    match cfg.correlation {
        None => {
            let others: Vec<VisualFeature> = VisualFeature::ALL.into_iter().filter(|&f| f != target).collect();
            let mut train_combos = Vec::new();
            let mut val_combos = Vec::new();
            for &t in &manifest.in_train[target.index()] {
                for a in 0..N_CLASSES {
                    for b in 0..N_CLASSES {
                        let mut c = [0usize; 3];
                        c[target.index()] = t;
                        c[others[0].index()] = a;
                        c[others[1].index()] = b;
                        let a_in = manifest.in_train[others[0].index()].contains(&a);
                        let b_in = manifest.in_train[others[1].index()].contains(&b);
                        if a_in && b_in {
                            train_combos.push(c);
                        } else {
                            val_combos.push(c);
                        }
                    }
                }
            }
            for i in 0..cfg.n_train {
                let id = draw.take(train_combos[i % train_combos.len()], rng)?;
                manifest.train.push(id);
            }
            for i in 0..cfg.n_val {
                let id = draw.take(val_combos[i % val_combos.len()], rng)?;
                manifest.val.push(id);
            }
        }
        Some(corr) => {
            let cf = corr.pair.partner(target).expect("validated");
            let third = manifest.third_feature();
            let mut partners = manifest.in_train[cf.index()].clone();
            rng.shuffle(&mut partners);
            manifest.matching = manifest.in_train[target.index()]
                .iter()
                .copied()
                .zip(partners)
                .collect();
            let p = corr.conditional_match_probability;
            let targets = manifest.in_train[target.index()].clone();
            for (n, third_from_held_out) in [(cfg.n_train, false), (cfg.n_val, true)] {
                let thirds = if third_from_held_out {
                    manifest.held_out[third.index()].clone()
                } else {
                    manifest.in_train[third.index()].clone()
                };
                // targets and third-feature classes both balanced
                let mut order: Vec<(usize, usize)> = (0..n)
                    .map(|i| (i % targets.len(), (i / targets.len()) % thirds.len()))
                    .collect();
                rng.shuffle(&mut order);
                for &(j, k) in &order {
                    let t = targets[j];
                    let matched = manifest.matching[j].1;
                    let c_class = if rng.bernoulli(p) {
                        matched
                    } else {
                        let rest: Vec<usize> = manifest.in_train[cf.index()]
                            .iter()
                            .copied()
                            .filter(|&c| c != matched)
                            .collect();
                        choose(rng, &rest)
                    };
                    let third_class = thirds[k];
                    let mut c = [0usize; 3];
                    c[target.index()] = t;
                    c[cf.index()] = c_class;
                    c[third.index()] = third_class;
                    let id = draw.take(c, rng)?;
                    if third_from_held_out {
                        manifest.val.push(id);
                    } else {
                        manifest.train.push(id);
                    }
                }
            }
        }
    }
    Ok(manifest)
}

/// Decoding sets for `feature`: its class is one of its in-train classes
/// (balanced), the other two features range freely over the pool, and no
/// entry repeats across or within the two sets. Labels are in-train class
/// positions.
pub fn decode_split(
    pool: &[PoolEntry],
    manifest: &SplitManifest,
    feature: VisualFeature,
    n_train: usize,
    n_val: usize,
    rng: &mut Rng,
) -> Result<(Vec<u64>, Vec<u64>)> {
    let classes = &manifest.in_train[feature.index()];
    let mut by_class: Vec<Vec<u64>> = classes
        .iter()
        .map(|&c| pool.iter().filter(|e| e.class(feature) == c).map(|e| e.id).collect())
        .collect();
    for ids in &mut by_class {
        rng.shuffle(ids);
    }
    let mut sets = [Vec::with_capacity(n_train), Vec::with_capacity(n_val)];
    for (s, n) in [n_train, n_val].into_iter().enumerate() {
        for i in 0..n {
            let k = i % classes.len();
            let id = by_class[k].pop().ok_or_else(|| {
                Error::config(format!("pool too small for {n_train} + {n_val} decoding examples"))
            })?;
            sets[s].push(id);
        }
        rng.shuffle(&mut sets[s]);
    }
    let [train, val] = sets;
    Ok((train, val))
}
