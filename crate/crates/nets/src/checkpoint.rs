//! Checkpoints: a JSON manifest next to a little-endian `f64` blob holding
//! every parameter tensor in [`Network::params`] order.

use std::fs;
use std::path::{Path, PathBuf};

use featlab_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::cnn::{Cnn, CnnSpec};
use crate::mlp::{Mlp, MlpSpec};
use crate::network::Network;
use crate::train::{History, TrainConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArchSpec {
    Mlp(MlpSpec),
    Cnn(CnnSpec),
}

/// Models that can be rebuilt from an [`ArchSpec`].
pub trait Architecture: Network + Sized {
    fn arch(&self) -> ArchSpec;
    /// A model of the given architecture with all parameters zero.
    fn blank(arch: &ArchSpec) -> Result<Self>;
}

impl Architecture for Mlp {
    fn arch(&self) -> ArchSpec {
        ArchSpec::Mlp(self.spec().clone())
    }

    fn blank(arch: &ArchSpec) -> Result<Self> {
        match arch {
            ArchSpec::Mlp(s) => Mlp::zeros(s.clone()),
            other => Err(Error::config(format!("checkpoint holds {other:?}, not an MLP"))),
        }
    }
}

impl Architecture for Cnn {
    fn arch(&self) -> ArchSpec {
        ArchSpec::Cnn(self.spec().clone())
    }

    fn blank(arch: &ArchSpec) -> Result<Self> {
        match arch {
            ArchSpec::Cnn(s) => Cnn::zeros(s.clone()),
            other => Err(Error::config(format!("checkpoint holds {other:?}, not a CNN"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub arch: ArchSpec,
    /// Length of each parameter tensor, in blob order.
    pub tensor_lengths: Vec<usize>,
    pub blob: String,
    pub seed: Option<u64>,
    pub config: Option<TrainConfig>,
    pub history: Option<History>,
}

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.params")))
}

pub fn save<N: Architecture>(
    dir: &Path,
    stem: &str,
    model: &N,
    seed: Option<u64>,
    config: Option<&TrainConfig>,
    history: Option<&History>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let (manifest_path, blob_path) = paths(dir, stem);
    let params = model.params();
    let mut bytes = Vec::with_capacity(8 * model.param_count());
    for p in &params {
        for v in p.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(&blob_path, bytes)?;
    let manifest = CheckpointManifest {
        format_version: FORMAT_VERSION,
        arch: model.arch(),
        tensor_lengths: params.iter().map(|p| p.len()).collect(),
        blob: blob_path.file_name().unwrap().to_string_lossy().into_owned(),
        seed,
        config: config.cloned(),
        history: history.cloned(),
    };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest_path)
}

pub fn load<N: Architecture>(dir: &Path, stem: &str) -> Result<(N, CheckpointManifest)> {
    let (manifest_path, _) = paths(dir, stem);
    let manifest: CheckpointManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::config(format!(
            "checkpoint format {} is not supported",
            manifest.format_version
        )));
    }
    let mut model = N::blank(&manifest.arch)?;
    let lengths: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    if lengths != manifest.tensor_lengths {
        return Err(Error::config("checkpoint tensor layout does not match its architecture"));
    }
    let bytes = fs::read(dir.join(&manifest.blob))?;
    if bytes.len() != 8 * lengths.iter().sum::<usize>() {
        return Err(Error::config(format!(
            "parameter blob has {} bytes, expected {}",
            bytes.len(),
            8 * lengths.iter().sum::<usize>()
        )));
    }
    let mut chunks = bytes.chunks_exact(8);
    for p in model.params_mut() {
        for v in p.iter_mut() {
            *v = f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap());
        }
    }
    Ok((model, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlp_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Mlp::init(MlpSpec::binary_task(), 11).unwrap();
        let cfg = TrainConfig::full_batch_gd(0.2, 10, 11);
        save(dir.path(), "m", &m, Some(11), Some(&cfg), None).unwrap();
        let (back, manifest): (Mlp, _) = load(dir.path(), "m").unwrap();
        assert_eq!(back, m);
        assert_eq!(manifest.config, Some(cfg));
        let a: Vec<u64> = m.flat_params().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.flat_params().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn cnn_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Cnn::init(CnnSpec::standard(16, 16, 7), 2).unwrap();
        save(dir.path(), "c", &m, None, None, None).unwrap();
        let (back, _): (Cnn, _) = load(dir.path(), "c").unwrap();
        assert_eq!(back, m);
        assert!(load::<Mlp>(dir.path(), "c").is_err());
    }

    #[test]
    fn truncated_blob_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let m = Mlp::init(MlpSpec::binary_task(), 1).unwrap();
        save(dir.path(), "m", &m, None, None, None).unwrap();
        let blob = dir.path().join("m.params");
        let bytes = fs::read(&blob).unwrap();
        fs::write(&blob, &bytes[..bytes.len() - 8]).unwrap();
        assert!(load::<Mlp>(dir.path(), "m").is_err());
    }
}
