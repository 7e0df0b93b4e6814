//! Experiment configuration files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use featlab_core::{Error, Result};
use featlab_data::{EasyRule, FeaturePair, NavonSpec, TrifeatureSpec, VisualFeature};
use featlab_nets::{CnnSpec, MlpSpec, TrainConfig, FC2};
use featlab_probes::{BinaryDecoderConfig, DecoderGrid};
use featlab_repsim::Method;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    BinaryTradeoff,
    BinaryDynamics,
    BinaryRsa,
    VisionEnhancement,
    VisionRedundant,
    VisionCorrelated,
    VisionRsa,
    Navon,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BinaryTradeoff => "binary-tradeoff",
            ExperimentKind::BinaryDynamics => "binary-dynamics",
            ExperimentKind::BinaryRsa => "binary-rsa",
            ExperimentKind::VisionEnhancement => "vision-enhancement",
            ExperimentKind::VisionRedundant => "vision-redundant",
            ExperimentKind::VisionCorrelated => "vision-correlated",
            ExperimentKind::VisionRsa => "vision-rsa",
            ExperimentKind::Navon => "navon",
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(
            self,
            ExperimentKind::BinaryTradeoff | ExperimentKind::BinaryDynamics | ExperimentKind::BinaryRsa
        )
    }

    pub fn is_rsa(self) -> bool {
        matches!(self, ExperimentKind::BinaryRsa | ExperimentKind::VisionRsa)
    }

    /// Report produced when none is named.
    pub fn default_report(self) -> &'static str {
        match self {
            ExperimentKind::BinaryTradeoff => "tradeoff",
            ExperimentKind::BinaryDynamics => "dynamics",
            ExperimentKind::BinaryRsa | ExperimentKind::VisionRsa => "similarity",
            ExperimentKind::VisionEnhancement | ExperimentKind::Navon => "enhancement",
            ExperimentKind::VisionRedundant => "redundant",
            ExperimentKind::VisionCorrelated => "correlated",
        }
    }
}

/// Nonlinear-versus-linear check on a larger decoding set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NonlinearCheck {
    pub n_decode: usize,
    /// Easy predictivities at which the check runs.
    pub predictivities: Vec<f64>,
    pub linear: BinaryDecoderConfig,
    pub nonlinear: BinaryDecoderConfig,
}

impl Default for NonlinearCheck {
    fn default() -> Self {
        NonlinearCheck {
            n_decode: 2048,
            predictivities: vec![0.5, 1.0],
            linear: BinaryDecoderConfig::linear().with_learning_rate(1e-2).with_epochs(3000),
            nonlinear: BinaryDecoderConfig::nonlinear().with_learning_rate(1e-2).with_epochs(3000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsSettings {
    /// Reliance is measured on a snapshot every this many epochs.
    pub snapshot_every: usize,
    /// Snapshot epochs that also get linear decoders.
    pub decode_epochs: Vec<usize>,
}

impl Default for DynamicsSettings {
    fn default() -> Self {
        DynamicsSettings {
            snapshot_every: 10,
            decode_epochs: vec![0, 50, 100, 200, 500, 1000],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySettings {
    pub method: Method,
    pub probe: String,
    /// Binary stimuli count; vision uses `per_combo` renditions of every combination.
    pub n_stimuli: usize,
    pub per_combo: usize,
    pub stimulus_seed: u64,
    pub resamples: usize,
    pub level: f64,
    pub bootstrap_seed: u64,
}

impl Default for SimilaritySettings {
    fn default() -> Self {
        SimilaritySettings {
            method: Method::default(),
            probe: featlab_nets::FINAL_HIDDEN.to_string(),
            n_stimuli: 256,
            per_combo: 1,
            stimulus_seed: 0,
            resamples: featlab_repsim::DEFAULT_RESAMPLES,
            level: 0.95,
            bootstrap_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinarySettings {
    pub easy_predictivities: Vec<f64>,
    pub hard_predictivity: f64,
    pub n_train: usize,
    /// Size of reliance probe sets and of each linear decoding set.
    pub n_eval: usize,
    pub easy_rule: EasyRule,
    pub model: MlpSpec,
    /// The seed field is replaced per run.
    pub training: TrainConfig,
    pub decoder: BinaryDecoderConfig,
    /// Non-feature input units decoded from the final hidden layer.
    pub unit_probes: Vec<usize>,
    pub nonlinear: Option<NonlinearCheck>,
    pub dynamics: Option<DynamicsSettings>,
    /// Similarity runs: train a two-output model on both features too.
    pub multitask: bool,
    pub similarity: SimilaritySettings,
}

impl Default for BinarySettings {
    fn default() -> Self {
        BinarySettings {
            easy_predictivities: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            hard_predictivity: 0.9,
            n_train: 256,
            n_eval: 512,
            easy_rule: EasyRule::FirstBit,
            model: MlpSpec::binary_task(),
            training: TrainConfig::full_batch_gd(0.2, 1000, 0),
            decoder: BinaryDecoderConfig::linear().with_learning_rate(1e-2).with_epochs(3000),
            unit_probes: vec![5, 25],
            nonlinear: None,
            dynamics: None,
            multitask: true,
            similarity: SimilaritySettings::default(),
        }
    }
}

/// Which pixels the untrained model sees when it is decoded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UntrainedInputs {
    /// Same per-channel normalization as the trained model.
    #[default]
    Normalized,
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeSettings {
    pub probes: Vec<String>,
    pub features: Vec<VisualFeature>,
    pub n_train: usize,
    pub n_val: usize,
    pub grid: DecoderGrid,
    pub untrained_inputs: UntrainedInputs,
}

impl Default for DecodeSettings {
    fn default() -> Self {
        DecodeSettings {
            probes: vec![FC2.to_string()],
            features: VisualFeature::ALL.to_vec(),
            n_train: 1000,
            n_val: 1000,
            grid: DecoderGrid {
                learning_rates: vec![1e-3, 1e-2, 1e-1],
                weight_decays: vec![0.0, 1e-4, 1e-3],
                epochs: 60,
                batch_size: 64,
            },
            untrained_inputs: UntrainedInputs::Normalized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSweep {
    pub pair: FeaturePair,
    pub target: VisualFeature,
    pub probabilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisionSettings {
    pub dataset: TrifeatureSpec,
    pub conv_channels: Vec<usize>,
    pub fc_widths: [usize; 2],
    /// The seed field is replaced per run.
    pub training: TrainConfig,
    pub n_train: usize,
    pub n_val: usize,
    pub held_out_per_feature: usize,
    /// Enhancement and similarity targets.
    pub targets: Vec<VisualFeature>,
    /// Redundant pairs, trained at conditional probability 1.
    pub pairs: Vec<FeaturePair>,
    pub correlations: Vec<CorrelationSweep>,
    pub decode: DecodeSettings,
    pub similarity: SimilaritySettings,
    /// Train-split images written as PNG by `gen`.
    pub png_preview: usize,
}

impl Default for VisionSettings {
    fn default() -> Self {
        let mut similarity = SimilaritySettings::default();
        similarity.probe = FC2.to_string();
        VisionSettings {
            dataset: TrifeatureSpec::at_size(32, 20, 0),
            conv_channels: vec![8, 16, 32],
            fc_widths: [128, 64],
            training: TrainConfig::adam(1e-3, 1e-4, 64, 15, 0),
            n_train: 1400,
            n_val: 1400,
            held_out_per_feature: 3,
            targets: VisualFeature::ALL.to_vec(),
            pairs: vec![FeaturePair::ShapeColor, FeaturePair::ShapeTexture],
            correlations: Vec::new(),
            decode: DecodeSettings::default(),
            similarity,
            png_preview: 16,
        }
    }
}

impl VisionSettings {
    /// Correlated splits draw without replacement from the matching
    /// combinations, which at certainty are a tenth of the pool.
    pub fn correlated() -> VisionSettings {
        let mut v = VisionSettings::default();
        v.dataset.renditions_per_combo = 40;
        v.n_val = 700;
        v
    }

    pub fn cnn_spec(&self, n_classes: usize) -> CnnSpec {
        let mut spec = CnnSpec::standard(self.dataset.image_size, self.dataset.image_size, n_classes);
        spec.conv_channels = self.conv_channels.clone();
        spec.fc_widths = self.fc_widths;
        spec
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavonSettings {
    pub dataset: NavonSpec,
    pub conv_channels: Vec<usize>,
    pub fc_widths: [usize; 2],
    pub training: TrainConfig,
    /// Share of the enumerated items used for validation.
    pub val_fraction: f64,
    /// `shape` or `texture`.
    pub targets: Vec<VisualFeature>,
    pub decode: DecodeSettings,
    pub png_preview: usize,
}

impl Default for NavonSettings {
    fn default() -> Self {
        NavonSettings {
            dataset: NavonSpec {
                image_size: 32,
                ..NavonSpec::default()
            },
            conv_channels: vec![8, 16, 32],
            fc_widths: [128, 64],
            training: TrainConfig::adam(1e-3, 1e-4, 64, 15, 0),
            val_fraction: 0.2,
            targets: vec![VisualFeature::Shape, VisualFeature::Texture],
            decode: DecodeSettings {
                features: vec![VisualFeature::Shape, VisualFeature::Texture],
                n_train: 1300,
                n_val: 650,
                ..DecodeSettings::default()
            },
            png_preview: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            resamples: 10_000,
            level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub binary: Option<BinarySettings>,
    #[serde(default)]
    pub vision: Option<VisionSettings>,
    #[serde(default)]
    pub navon: Option<NavonSettings>,
    #[serde(default)]
    pub report: ReportSettings,
    /// Not part of the content hash.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn check_p(name: &str, p: f64, lo: f64) -> Result<()> {
    if !(p >= lo && p <= 1.0) {
        return Err(Error::config(format!("{name} = {p} outside [{lo}, 1]")));
    }
    Ok(())
}

fn check_decode(d: &DecodeSettings) -> Result<()> {
    d.grid.validate()?;
    if d.probes.is_empty() || d.features.is_empty() {
        return Err(Error::config("decoding needs at least one probe and one feature"));
    }
    if d.n_train == 0 || d.n_val == 0 {
        return Err(Error::config("decoding sets must be non-empty"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Desk-scale defaults for `kind`.
    pub fn preset(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: kind.name().to_string(),
            kind,
            seeds: (0..5).collect(),
            binary: None,
            vision: None,
            navon: None,
            report: ReportSettings::default(),
            out: None,
        };
        match kind {
            ExperimentKind::BinaryTradeoff | ExperimentKind::BinaryRsa => cfg.binary = Some(BinarySettings::default()),
            ExperimentKind::BinaryDynamics => {
                cfg.binary = Some(BinarySettings {
                    easy_predictivities: vec![0.65],
                    dynamics: Some(DynamicsSettings::default()),
                    ..BinarySettings::default()
                })
            }
            ExperimentKind::VisionEnhancement | ExperimentKind::VisionRsa => {
                cfg.seeds = (0..3).collect();
                cfg.vision = Some(VisionSettings::default());
            }
            ExperimentKind::VisionRedundant => {
                cfg.seeds = (0..3).collect();
                cfg.vision = Some(VisionSettings::correlated());
            }
            ExperimentKind::VisionCorrelated => {
                cfg.seeds = (0..3).collect();
                let mut v = VisionSettings::correlated();
                v.correlations = vec![CorrelationSweep {
                    pair: FeaturePair::ShapeColor,
                    target: VisualFeature::Color,
                    probabilities: vec![1.0 / 7.0, 0.5, 0.7, 0.9],
                }];
                cfg.vision = Some(v);
            }
            ExperimentKind::Navon => {
                cfg.seeds = (0..3).collect();
                cfg.navon = Some(NavonSettings::default());
            }
        }
        cfg
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, output directory excluded.
    pub fn content_hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        // serde_json maps are key-sorted, so this is canonical
        let value = serde_json::to_value(&c).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn binary(&self) -> Result<&BinarySettings> {
        self.binary
            .as_ref()
            .ok_or_else(|| Error::config(format!("{} needs a `binary` section", self.kind.name())))
    }

    pub fn vision(&self) -> Result<&VisionSettings> {
        self.vision
            .as_ref()
            .ok_or_else(|| Error::config(format!("{} needs a `vision` section", self.kind.name())))
    }

    pub fn navon(&self) -> Result<&NavonSettings> {
        self.navon
            .as_ref()
            .ok_or_else(|| Error::config(format!("{} needs a `navon` section", self.kind.name())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config("name must be non-empty and contain no path separators"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        if self.report.resamples == 0 || !(self.report.level > 0.0 && self.report.level < 1.0) {
            return Err(Error::config("report needs resamples > 0 and a level in (0, 1)"));
        }
        match self.kind {
            k if k.is_binary() => self.validate_binary(),
            ExperimentKind::Navon => self.validate_navon(),
            _ => self.validate_vision(),
        }
    }

    fn validate_binary(&self) -> Result<()> {
        let b = self.binary()?;
        if b.easy_predictivities.is_empty() {
            return Err(Error::config("easy_predictivities must be non-empty"));
        }
        for &p in &b.easy_predictivities {
            check_p("easy predictivity", p, 0.5)?;
        }
        check_p("hard predictivity", b.hard_predictivity, 0.5)?;
        if b.n_train == 0 || b.n_eval == 0 {
            return Err(Error::config("n_train and n_eval must be positive"));
        }
        b.model.validate()?;
        if b.model.widths[0] != featlab_data::binary::INPUT_BITS {
            return Err(Error::config("binary models take 32 inputs"));
        }
        b.training.validate()?;
        if b.training.epochs == 0 {
            return Err(Error::config("training needs at least one epoch"));
        }
        for &u in &b.unit_probes {
            if u >= featlab_data::binary::INPUT_BITS {
                return Err(Error::config(format!("unit {u} is not an input bit")));
            }
        }
        if let Some(n) = &b.nonlinear {
            if n.n_decode == 0 {
                return Err(Error::config("nonlinear check needs decoding examples"));
            }
            for &p in &n.predictivities {
                check_p("nonlinear predictivity", p, 0.5)?;
            }
        }
        if let Some(d) = &b.dynamics {
            if d.snapshot_every == 0 {
                return Err(Error::config("snapshot_every must be positive"));
            }
            if d.decode_epochs.iter().any(|e| e % d.snapshot_every != 0 || *e > b.training.epochs) {
                return Err(Error::config("decode epochs must be snapshot epochs within training"));
            }
        }
        if self.kind == ExperimentKind::BinaryDynamics && b.dynamics.is_none() {
            return Err(Error::config("binary-dynamics needs a `dynamics` section"));
        }
        if self.kind == ExperimentKind::BinaryRsa {
            check_similarity(&b.similarity, self.seeds.len())?;
        }
        Ok(())
    }

    fn validate_vision(&self) -> Result<()> {
        let v = self.vision()?;
        v.dataset.validate()?;
        v.cnn_spec(7).validate()?;
        v.training.validate()?;
        if v.n_train == 0 || v.n_val == 0 {
            return Err(Error::config("vision splits must be non-empty"));
        }
        check_decode(&v.decode)?;
        match self.kind {
            ExperimentKind::VisionEnhancement | ExperimentKind::VisionRsa if v.targets.is_empty() => {
                return Err(Error::config("targets must be non-empty"))
            }
            ExperimentKind::VisionRedundant if v.pairs.is_empty() => return Err(Error::config("pairs must be non-empty")),
            ExperimentKind::VisionCorrelated => {
                if v.correlations.is_empty() {
                    return Err(Error::config("correlations must be non-empty"));
                }
                for c in &v.correlations {
                    if !c.pair.contains(c.target) {
                        return Err(Error::config(format!("{} is not in its correlated pair", c.target.name())));
                    }
                    if c.probabilities.is_empty() {
                        return Err(Error::config("probability list must be non-empty"));
                    }
                    for &p in &c.probabilities {
                        if !(p > 0.0 && p <= 1.0) {
                            return Err(Error::config(format!("conditional probability {p} outside (0, 1]")));
                        }
                    }
                }
            }
            ExperimentKind::VisionRsa => check_similarity(&v.similarity, self.seeds.len())?,
            _ => {}
        }
        Ok(())
    }

    fn validate_navon(&self) -> Result<()> {
        let n = self.navon()?;
        n.dataset.validate()?;
        n.training.validate()?;
        check_decode(&n.decode)?;
        if !(n.val_fraction > 0.0 && n.val_fraction < 1.0) {
            return Err(Error::config("val_fraction must lie in (0, 1)"));
        }
        if n.targets.is_empty() || n.targets.iter().chain(&n.decode.features).any(|f| *f == VisualFeature::Color) {
            return Err(Error::config("navon features are shape and texture"));
        }
        Ok(())
    }
}

fn check_similarity(s: &SimilaritySettings, seeds: usize) -> Result<()> {
    if seeds < 2 {
        return Err(Error::config("similarity runs need at least two seeds"));
    }
    if s.n_stimuli < 3 || s.per_combo == 0 || s.resamples == 0 || !(s.level > 0.0 && s.level < 1.0) {
        return Err(Error::config("similarity settings out of range"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ExperimentKind; 8] = [
        ExperimentKind::BinaryTradeoff,
        ExperimentKind::BinaryDynamics,
        ExperimentKind::BinaryRsa,
        ExperimentKind::VisionEnhancement,
        ExperimentKind::VisionRedundant,
        ExperimentKind::VisionCorrelated,
        ExperimentKind::VisionRsa,
        ExperimentKind::Navon,
    ];

    #[test]
    fn presets_validate_and_round_trip() {
        for kind in KINDS {
            let cfg = ExperimentConfig::preset(kind);
            cfg.validate().unwrap();
            let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.content_hash(), cfg.content_hash());
        }
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::preset(ExperimentKind::BinaryTradeoff);
        let mut b = a.clone();
        b.out = Some("/tmp/x".into());
        assert_eq!(a.content_hash(), b.content_hash());
        b.seeds.push(9);
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 64);
    }

    #[test]
    fn out_of_range_rejected() {
        let mut c = ExperimentConfig::preset(ExperimentKind::BinaryTradeoff);
        c.binary.as_mut().unwrap().easy_predictivities.push(0.4);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::preset(ExperimentKind::BinaryTradeoff);
        c.seeds.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::preset(ExperimentKind::VisionEnhancement);
        c.vision = None;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::preset(ExperimentKind::Navon);
        c.schema_version = 7;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let json = r#"{"schema_version":1,"name":"t","kind":"binary-tradeoff","seeds":[0,1],
            "binary":{"easy_predictivities":[0.5,1.0]}}"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.binary().unwrap().n_train, 256);
    }
}
