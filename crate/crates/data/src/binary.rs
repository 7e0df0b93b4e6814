//! Binary-feature datasets.
//!
//! Inputs are 32 bits split into two 16-bit domains. Bits `0..16` carry the
//! easy feature (by default simply bit 0), bits `16..32` carry the hard
//! feature: the parity of bits 16 and 17. Every example first receives a
//! label (exactly `⌈n/2⌉` ones), then for each domain the label is copied,
//! flipped with probability `1 - predictivity`, and the domain's 16 bits are
//! drawn uniformly from all patterns whose feature equals that copy.

use std::fs;
use std::path::Path;

use featlab_core::{Error, Matrix, Result, Rng};
use serde::{Deserialize, Serialize};

pub const INPUT_BITS: usize = 32;
pub const DOMAIN_BITS: usize = 16;
pub const HARD_OFFSET: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Easy,
    Hard,
}

impl Feature {
    pub fn other(self) -> Feature {
        match self {
            Feature::Easy => Feature::Hard,
            Feature::Hard => Feature::Easy,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Easy => "easy",
            Feature::Hard => "hard",
        }
    }
}

/// How the easy feature is read off the easy domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EasyRule {
    /// Value of bit 0.
    #[default]
    FirstBit,
    /// 1 when more than half of the 16 easy bits are set.
    Majority,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryDatasetSpec {
    pub easy_predictivity: f64,
    pub hard_predictivity: f64,
    pub n_examples: usize,
    pub seed: u64,
    #[serde(default)]
    pub easy_rule: EasyRule,
}

impl BinaryDatasetSpec {
    pub fn new(easy_predictivity: f64, hard_predictivity: f64, n_examples: usize, seed: u64) -> Self {
        BinaryDatasetSpec {
            easy_predictivity,
            hard_predictivity,
            n_examples,
            seed,
            easy_rule: EasyRule::FirstBit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_examples == 0 {
            return Err(Error::config("binary dataset needs at least one example"));
        }
        for (name, p) in [
            ("easy_predictivity", self.easy_predictivity),
            ("hard_predictivity", self.hard_predictivity),
        ] {
            if !(0.5..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} = {p} outside [0.5, 1]")));
            }
        }
        Ok(())
    }

    pub fn predictivity(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Easy => self.easy_predictivity,
            Feature::Hard => self.hard_predictivity,
        }
    }

    pub fn with_predictivity(&self, feature: Feature, p: f64) -> Self {
        let mut s = self.clone();
        match feature {
            Feature::Easy => s.easy_predictivity = p,
            Feature::Hard => s.hard_predictivity = p,
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryExample {
    pub input: [u8; INPUT_BITS],
    pub label: u8,
    pub easy_value: u8,
    pub hard_value: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDataset {
    pub spec: BinaryDatasetSpec,
    pub examples: Vec<BinaryExample>,
}

fn check_len(input: &[u8]) -> Result<()> {
    if input.len() != INPUT_BITS {
        return Err(Error::config(format!(
            "binary input has {} entries, expected {INPUT_BITS}",
            input.len()
        )));
    }
    Ok(())
}

/// Easy feature under the default rule (bit 0).
pub fn easy_feature(input: &[u8]) -> Result<u8> {
    easy_feature_with(input, EasyRule::FirstBit)
}

pub fn easy_feature_with(input: &[u8], rule: EasyRule) -> Result<u8> {
    check_len(input)?;
    Ok(match rule {
        EasyRule::FirstBit => input[0] & 1,
        EasyRule::Majority => {
            let ones: usize = input[..DOMAIN_BITS].iter().map(|&b| b as usize).sum();
            (ones > DOMAIN_BITS / 2) as u8
        }
    })
}

/// XOR of the first two bits of the hard domain.
pub fn hard_feature(input: &[u8]) -> Result<u8> {
    check_len(input)?;
    Ok((input[HARD_OFFSET] ^ input[HARD_OFFSET + 1]) & 1)
}

fn sample_easy_domain(value: u8, rule: EasyRule, rng: &mut Rng, out: &mut [u8]) {
    match rule {
        EasyRule::FirstBit => {
            out[0] = value;
            for b in &mut out[1..DOMAIN_BITS] {
                *b = rng.bit();
            }
        }
        EasyRule::Majority => loop {
            for b in out[..DOMAIN_BITS].iter_mut() {
                *b = rng.bit();
            }
            let ones: usize = out[..DOMAIN_BITS].iter().map(|&b| b as usize).sum();
            if ((ones > DOMAIN_BITS / 2) as u8) == value {
                break;
            }
        },
    }
}

fn sample_hard_domain(value: u8, rng: &mut Rng, out: &mut [u8]) {
    let first = rng.bit();
    out[0] = first;
    out[1] = first ^ value;
    for b in &mut out[2..DOMAIN_BITS] {
        *b = rng.bit();
    }
}

/// Draws a dataset following the label-then-flip procedure.
pub fn sample_dataset(spec: &BinaryDatasetSpec, rng: &mut Rng) -> Result<BinaryDataset> {
    spec.validate()?;
    let n = spec.n_examples;
    let ones = n.div_ceil(2);
    let mut labels: Vec<u8> = (0..n).map(|i| (i < ones) as u8).collect();
    rng.shuffle(&mut labels);

    let mut examples = Vec::with_capacity(n);
    for &label in &labels {
        let easy_value = if rng.bernoulli(spec.easy_predictivity) { label } else { 1 - label };
        let hard_value = if rng.bernoulli(spec.hard_predictivity) { label } else { 1 - label };
        let mut input = [0u8; INPUT_BITS];
        sample_easy_domain(easy_value, spec.easy_rule, rng, &mut input[..DOMAIN_BITS]);
        sample_hard_domain(hard_value, rng, &mut input[HARD_OFFSET..]);
        examples.push(BinaryExample {
            input,
            label,
            easy_value,
            hard_value,
        });
    }
    Ok(BinaryDataset {
        spec: spec.clone(),
        examples,
    })
}

/// Convenience: sample with a generator seeded from `spec.seed`.
pub fn generate(spec: &BinaryDatasetSpec) -> Result<BinaryDataset> {
    sample_dataset(spec, &mut Rng::seed_from(spec.seed))
}

/// Fresh dataset where `which` is at chance (0.5) and the other feature
/// matches the label perfectly. Accuracy on it measures reliance on the
/// other feature.
pub fn make_feature_unpredictive(spec: &BinaryDatasetSpec, which: Feature, rng: &mut Rng) -> Result<BinaryDataset> {
    let s = spec
        .with_predictivity(which, 0.5)
        .with_predictivity(which.other(), 1.0);
    sample_dataset(&s, rng)
}

impl BinaryDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// `n × 32` matrix of 0/1 inputs.
    pub fn inputs(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.len() * INPUT_BITS);
        for e in &self.examples {
            data.extend(e.input.iter().map(|&b| b as f64));
        }
        Matrix::new(self.len(), INPUT_BITS, data).expect("shape is consistent by construction")
    }

    pub fn labels(&self) -> Vec<u8> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Content-derived ids: the input bits packed into a word, then the label.
    pub fn ids(&self) -> Vec<u64> {
        self.examples
            .iter()
            .map(|e| {
                let packed = e.input.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
                (packed << 1) | e.label as u64
            })
            .collect()
    }

    pub fn feature_values(&self, feature: Feature) -> Vec<u8> {
        self.examples
            .iter()
            .map(|e| match feature {
                Feature::Easy => e.easy_value,
                Feature::Hard => e.hard_value,
            })
            .collect()
    }

    /// Fraction of examples whose feature value equals the label.
    pub fn match_rate(&self, feature: Feature) -> f64 {
        let hits = self
            .examples
            .iter()
            .filter(|e| {
                let v = match feature {
                    Feature::Easy => e.easy_value,
                    Feature::Hard => e.hard_value,
                };
                v == e.label
            })
            .count();
        hits as f64 / self.len() as f64
    }

    /// Value of one input unit across examples, for use as decoding targets.
    pub fn unit_labels(&self, unit_index: usize) -> Result<Vec<u8>> {
        if unit_index >= INPUT_BITS {
            return Err(Error::config(format!(
                "unit index {unit_index} out of range (0..{INPUT_BITS})"
            )));
        }
        Ok(self.examples.iter().map(|e| e.input[unit_index]).collect())
    }
}

pub fn unit_labels(dataset: &BinaryDataset, unit_index: usize) -> Result<Vec<u8>> {
    dataset.unit_labels(unit_index)
}

/// Bytes per serialised example: 32 input bits, label, easy, hard.
pub const RECORD_BYTES: usize = INPUT_BITS + 3;
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    spec: BinaryDatasetSpec,
    n_examples: usize,
    record_bytes: usize,
    record_layout: String,
    data_file: String,
}

impl BinaryDataset {
    /// Writes `<stem>.json` (manifest) and `<stem>.bin` (one
    /// [`RECORD_BYTES`]-byte record per example).
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let data_file = format!("{stem}.bin");
        let mut bytes = Vec::with_capacity(self.len() * RECORD_BYTES);
        for e in &self.examples {
            bytes.extend_from_slice(&e.input);
            bytes.extend_from_slice(&[e.label, e.easy_value, e.hard_value]);
        }
        fs::write(dir.join(&data_file), bytes)?;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            spec: self.spec.clone(),
            n_examples: self.len(),
            record_bytes: RECORD_BYTES,
            record_layout: "input[32] label easy_value hard_value (u8 each)".into(),
            data_file,
        };
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<BinaryDataset> {
        let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(format!("{stem}.json")))?)?;
        if manifest.format_version != FORMAT_VERSION || manifest.record_bytes != RECORD_BYTES {
            return Err(Error::config("unsupported binary dataset format"));
        }
        let bytes = fs::read(dir.join(&manifest.data_file))?;
        if bytes.len() != manifest.n_examples * RECORD_BYTES {
            return Err(Error::config(format!(
                "data file holds {} bytes, manifest expects {}",
                bytes.len(),
                manifest.n_examples * RECORD_BYTES
            )));
        }
        let examples = bytes
            .chunks_exact(RECORD_BYTES)
            .map(|rec| {
                let mut input = [0u8; INPUT_BITS];
                input.copy_from_slice(&rec[..INPUT_BITS]);
                BinaryExample {
                    input,
                    label: rec[INPUT_BITS],
                    easy_value: rec[INPUT_BITS + 1],
                    hard_value: rec[INPUT_BITS + 2],
                }
            })
            .collect();
        Ok(BinaryDataset {
            spec: manifest.spec,
            examples,
        })
    }
}
