//! Decoding features from frozen activations.
//!
//! Decoders only ever see activation matrices, never the model that
//! produced them.

pub mod binary;
pub mod decoder;
pub mod dynamics;
pub mod grid;
pub mod score;

pub use binary::{fit_binary_decoder, train_binary_decoder, BinaryDecoder, BinaryDecoderConfig};
pub use decoder::{DecodeData, LinearDecoder, NonlinearDecoder};
pub use dynamics::{dynamics_probe, DynamicsPoint, LabelSet};
pub use grid::{fit_linear_decoder, train_linear_decoder_grid, CellResult, DecodeReport, DecodeRow, DecoderGrid, DecoderKind};
pub use score::{above_chance, enhancement_score};
