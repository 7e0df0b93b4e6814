//! Synthetic datasets.
//!
//! * [`binary`]: 32-bit inputs carrying an easy (linear) and a hard (XOR)
//!   feature, each matching the label with a chosen predictivity.
//! * [`trifeature`]: rendered images with independent shape, texture and
//!   colour classes, plus correlated train/validation splits.
//! * [`navon`]: large letters drawn out of small copies of another letter.

pub mod binary;
pub mod glyphs;
pub mod image;
pub mod navon;
pub mod raster;
pub mod shapes;
pub mod split;
pub mod textures;
pub mod trifeature;

pub use binary::{BinaryDataset, BinaryDatasetSpec, BinaryExample, EasyRule, Feature};
pub use image::{normalization_stats, ChannelStats, ImageExample};
pub use navon::{render_navon, NavonItem, NavonSpec};
pub use split::{decode_split, sample_split, CorrelationSpec, FeaturePair, SplitConfig, SplitManifest};
pub use trifeature::{build_pool, render_trifeature, rsa_probe_set, PoolEntry, TrifeatureSpec, VisualFeature};
