//! Rendered images, channel statistics and PNG export.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use featlab_core::{Error, Matrix, Result};
use serde::{Deserialize, Serialize};

/// An `height × width × 3` image with its generating labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageExample {
    pub height: usize,
    pub width: usize,
    /// Row-major, channels fastest, values in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub shape_id: usize,
    pub texture_id: usize,
    /// Absent for Navon items.
    pub color_id: Option<usize>,
    pub render_seed: u64,
    pub rotation_shape: f64,
    pub rotation_texture: f64,
    /// Pixel offset of the shape centre from the image centre.
    pub position: (f64, f64),
}

impl ImageExample {
    pub fn pixel(&self, y: usize, x: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// 8-bit RGB PNG.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        let mut enc = png::Encoder::new(file, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let bytes: Vec<u8> = self.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
        enc.write_header()
            .and_then(|mut w| w.write_image_data(&bytes))
            .map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

/// Stacks images as rows of a matrix.
pub fn to_matrix(images: &[ImageExample]) -> Result<Matrix> {
    let Some(first) = images.first() else {
        return Ok(Matrix::zeros(0, 0));
    };
    let width = first.pixels.len();
    let mut data = Vec::with_capacity(width * images.len());
    for im in images {
        if im.pixels.len() != width {
            return Err(Error::config("images differ in size"));
        }
        data.extend_from_slice(&im.pixels);
    }
    Matrix::new(images.len(), width, data)
}

/// Per-channel mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl ChannelStats {
    pub const IDENTITY: ChannelStats = ChannelStats {
        mean: [0.0; 3],
        std: [1.0; 3],
    };

    /// `(x - mean) / std` per channel, in place on rows of channels-last pixels.
    pub fn apply(&self, images: &mut Matrix) {
        for (i, v) in images.as_mut_slice().iter_mut().enumerate() {
            let c = i % 3;
            *v = (*v - self.mean[c]) / self.std[c];
        }
    }
}

/// Two-pass channel statistics over the rows of `images` (channels last).
/// A zero standard deviation is replaced by 1.
pub fn normalization_stats(images: &Matrix) -> Result<ChannelStats> {
    if images.rows() == 0 || images.cols() == 0 {
        return Err(Error::config("normalization statistics of an empty set"));
    }
    if images.cols() % 3 != 0 {
        return Err(Error::config("image rows are not RGB"));
    }
    let count = (images.rows() * images.cols() / 3) as f64;
    let mut sum = [0.0; 3];
    for (i, v) in images.as_slice().iter().enumerate() {
        sum[i % 3] += v;
    }
    let mean = sum.map(|s| s / count);
    let mut sq = [0.0; 3];
    for (i, v) in images.as_slice().iter().enumerate() {
        let d = v - mean[i % 3];
        sq[i % 3] += d * d;
    }
    let std = sq.map(|s| {
        let sd = (s / count).sqrt();
        if sd > 0.0 {
            sd
        } else {
            1.0
        }
    });
    Ok(ChannelStats { mean, std })
}
