//! Shape × texture × colour images.

use featlab_core::{Error, Matrix, Result, Rng};
use serde::{Deserialize, Serialize};

use crate::image::ImageExample;
use crate::raster::{contains, rotate};
use crate::shapes::outline;
use crate::textures::{texture_on, BACKGROUND, COLORS};

pub const N_CLASSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VisualFeature {
    Shape,
    Texture,
    Color,
}

impl VisualFeature {
    pub const ALL: [VisualFeature; 3] = [VisualFeature::Shape, VisualFeature::Texture, VisualFeature::Color];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            VisualFeature::Shape => "shape",
            VisualFeature::Texture => "texture",
            VisualFeature::Color => "color",
        }
    }

    pub fn parse(s: &str) -> Result<VisualFeature> {
        VisualFeature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown visual feature {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrifeatureSpec {
    pub image_size: usize,
    /// Side of the square the (unrotated) shape is drawn into.
    pub shape_box: usize,
    /// Texture period in pixels.
    pub texture_period: f64,
    pub renditions_per_combo: usize,
    pub seed: u64,
}

impl TrifeatureSpec {
    /// Shape box and texture period scaled from a 224-pixel, 128-box layout.
    pub fn at_size(image_size: usize, renditions_per_combo: usize, seed: u64) -> TrifeatureSpec {
        TrifeatureSpec {
            image_size,
            shape_box: image_size * 128 / 224,
            texture_period: (10.0 * image_size as f64 / 224.0).max(3.0),
            renditions_per_combo,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape_box == 0 || self.renditions_per_combo == 0 {
            return Err(Error::config("shape box and renditions must be positive"));
        }
        if self.rotated_extent() > self.image_size as f64 {
            return Err(Error::config(format!(
                "{}-pixel image cannot contain a rotated {}-pixel shape box",
                self.image_size, self.shape_box
            )));
        }
        if !(self.texture_period > 0.0) {
            return Err(Error::config("texture period must be positive"));
        }
        Ok(())
    }

    /// Side of the box swept by the shape box under any rotation.
    pub fn rotated_extent(&self) -> f64 {
        self.shape_box as f64 * std::f64::consts::SQRT_2
    }

    pub fn pool_size(&self) -> usize {
        N_CLASSES * N_CLASSES * N_CLASSES * self.renditions_per_combo
    }
}

/// Metadata for one image of the pool; the pixels are rendered on demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: u64,
    pub shape: usize,
    pub texture: usize,
    pub color: usize,
    pub rendition: usize,
    pub render_seed: u64,
}

impl PoolEntry {
    pub fn class(&self, f: VisualFeature) -> usize {
        match f {
            VisualFeature::Shape => self.shape,
            VisualFeature::Texture => self.texture,
            VisualFeature::Color => self.color,
        }
    }
}

pub fn combo_index(shape: usize, texture: usize, color: usize) -> usize {
    (shape * N_CLASSES + texture) * N_CLASSES + color
}

/// Every combination `renditions_per_combo` times, ordered by
/// (shape, texture, colour, rendition). An entry's id is its position.
pub fn build_pool(spec: &TrifeatureSpec) -> Result<Vec<PoolEntry>> {
    spec.validate()?;
    let base = Rng::seed_from(spec.seed);
    let r = spec.renditions_per_combo;
    let mut pool = Vec::with_capacity(spec.pool_size());
    for shape in 0..N_CLASSES {
        for texture in 0..N_CLASSES {
            for color in 0..N_CLASSES {
                for rendition in 0..r {
                    let id = (combo_index(shape, texture, color) * r + rendition) as u64;
                    pool.push(PoolEntry {
                        id,
                        shape,
                        texture,
                        color,
                        rendition,
                        render_seed: base.child(id).seed(),
                    });
                }
            }
        }
    }
    Ok(pool)
}

/// Renders one image. Rotations, position and texture phase all derive
/// from `render_seed`.
pub fn render_trifeature(shape: usize, texture: usize, color: usize, render_seed: u64, spec: &TrifeatureSpec) -> Result<ImageExample> {
    spec.validate()?;
    if shape >= N_CLASSES || texture >= N_CLASSES || color >= N_CLASSES {
        return Err(Error::config(format!("class ids ({shape}, {texture}, {color}) out of range")));
    }
    let mut rng = Rng::seed_from(render_seed);
    let rotation_shape = rng.uniform_range(-45.0, 45.0);
    let rotation_texture = rng.uniform_range(-45.0, 45.0);
    let size = spec.image_size as f64;
    let margin = spec.rotated_extent() / 2.0;
    let cx = rng.uniform_range(margin, size - margin);
    let cy = rng.uniform_range(margin, size - margin);
    let phase = (
        rng.uniform() * 4.0 * spec.texture_period,
        rng.uniform() * 4.0 * spec.texture_period,
    );

    let poly = outline(shape);
    let half = spec.shape_box as f64 / 2.0;
    let n = spec.image_size;
    let mut pixels = Vec::with_capacity(n * n * 3);
    for y in 0..n {
        for x in 0..n {
            let d = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            let q = rotate((d.0 / half, d.1 / half), -rotation_shape);
            let rgb = if contains(&poly, q) {
                let t = rotate(d, -rotation_texture);
                if texture_on(texture, t.0 + phase.0, t.1 + phase.1, spec.texture_period) {
                    COLORS[color]
                } else {
                    BACKGROUND
                }
            } else {
                BACKGROUND
            };
            pixels.extend_from_slice(&rgb);
        }
    }
    Ok(ImageExample {
        height: n,
        width: n,
        pixels,
        shape_id: shape,
        texture_id: texture,
        color_id: Some(color),
        render_seed,
        rotation_shape,
        rotation_texture,
        position: (cx - size / 2.0, cy - size / 2.0),
    })
}

pub fn render_entry(entry: &PoolEntry, spec: &TrifeatureSpec) -> Result<ImageExample> {
    render_trifeature(entry.shape, entry.texture, entry.color, entry.render_seed, spec)
}

/// Renders entries straight into matrix rows.
pub fn render_matrix(entries: &[PoolEntry], spec: &TrifeatureSpec) -> Result<Matrix> {
    let width = spec.image_size * spec.image_size * 3;
    let mut data = Vec::with_capacity(width * entries.len());
    for e in entries {
        data.extend(render_entry(e, spec)?.pixels);
    }
    Matrix::new(entries.len(), width, data)
}

/// `per_combo` distinct renditions of every combination, in combination
/// order.
pub fn rsa_probe_set(pool: &[PoolEntry], per_combo: usize, rng: &mut Rng) -> Result<Vec<PoolEntry>> {
    if per_combo == 0 {
        return Err(Error::config("probe set needs at least one example per combination"));
    }
    let combos = N_CLASSES * N_CLASSES * N_CLASSES;
    if pool.is_empty() || pool.len() % combos != 0 {
        return Err(Error::config("pool is not a full combination grid"));
    }
    let r = pool.len() / combos;
    if per_combo > r {
        return Err(Error::config(format!(
            "pool has {r} renditions per combination, {per_combo} requested"
        )));
    }
    let mut out = Vec::with_capacity(combos * per_combo);
    for c in 0..combos {
        let picks = rng.permutation(r);
        for &k in &picks[..per_combo] {
            out.push(pool[c * r + k]);
        }
    }
    Ok(out)
}
