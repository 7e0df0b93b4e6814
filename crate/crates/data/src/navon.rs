//! Large letters drawn out of small copies of another letter.

use featlab_core::{Error, Result, Rng};
use serde::{Deserialize, Serialize};

use crate::glyphs::{ink, GLYPH_H, GLYPH_W};
use crate::image::ImageExample;
use crate::raster::rotate;

const INK: f64 = 0.0;
const BLANK: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavonSpec {
    pub n_letters: usize,
    pub positions: usize,
    pub image_size: usize,
    pub seed: u64,
}

impl Default for NavonSpec {
    fn default() -> Self {
        NavonSpec {
            n_letters: 26,
            positions: 5,
            image_size: 128,
            seed: 0,
        }
    }
}

impl NavonSpec {
    pub fn validate(&self) -> Result<()> {
        if !(2..=26).contains(&self.n_letters) {
            return Err(Error::config("letter count must be within 2..=26"));
        }
        if !(1..=5).contains(&self.positions) {
            return Err(Error::config("position count must be within 1..=5"));
        }
        if self.image_size < 32 {
            return Err(Error::config("navon images need at least 32 pixels"));
        }
        Ok(())
    }

    /// Side of one cell of the large letter (one small letter each).
    fn cell(&self) -> f64 {
        self.image_size as f64 * 0.55 / GLYPH_H as f64
    }

    fn offset(&self, position: usize) -> (f64, f64) {
        let d = 0.08 * self.image_size as f64;
        [(0.0, 0.0), (-d, -d), (d, -d), (-d, d), (d, d)][position]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavonItem {
    pub id: u64,
    pub shape: usize,
    pub texture: usize,
    pub position: usize,
    pub render_seed: u64,
}

/// All `(shape, texture, position)` items with shape ≠ texture.
pub fn enumerate(spec: &NavonSpec) -> Result<Vec<NavonItem>> {
    spec.validate()?;
    let base = Rng::seed_from(spec.seed);
    let mut items = Vec::new();
    for shape in 0..spec.n_letters {
        for texture in 0..spec.n_letters {
            if shape == texture {
                continue;
            }
            for position in 0..spec.positions {
                let id = ((shape * spec.n_letters + texture) * spec.positions + position) as u64;
                items.push(NavonItem {
                    id,
                    shape,
                    texture,
                    position,
                    render_seed: base.child(id).seed(),
                });
            }
        }
    }
    Ok(items)
}

/// Renders one item: the large letter is rotated by one seed-derived angle
/// and every small letter by another.
pub fn render_navon(shape: usize, texture: usize, position: usize, render_seed: u64, spec: &NavonSpec) -> Result<ImageExample> {
    spec.validate()?;
    if shape == texture {
        return Err(Error::ExcludedCombination(format!(
            "letter {shape} cannot be drawn out of itself"
        )));
    }
    if shape >= spec.n_letters || texture >= spec.n_letters || position >= spec.positions {
        return Err(Error::config("navon item out of range"));
    }
    let mut rng = Rng::seed_from(render_seed);
    let rotation_shape = rng.uniform_range(-45.0, 45.0);
    let rotation_texture = rng.uniform_range(-45.0, 45.0);
    let n = spec.image_size;
    let cell = spec.cell();
    let (ox, oy) = spec.offset(position);
    let (cx, cy) = (n as f64 / 2.0 + ox, n as f64 / 2.0 + oy);
    let (big_w, big_h) = (GLYPH_W as f64 * cell, GLYPH_H as f64 * cell);
    let small = cell / GLYPH_H as f64 * 0.9;

    let mut pixels = Vec::with_capacity(n * n * 3);
    for y in 0..n {
        for x in 0..n {
            let d = rotate((x as f64 + 0.5 - cx, y as f64 + 0.5 - cy), -rotation_shape);
            let (u, v) = (d.0 + big_w / 2.0, d.1 + big_h / 2.0);
            let mut value = BLANK;
            if u >= 0.0 && v >= 0.0 && u < big_w && v < big_h {
                let (col, row) = ((u / cell) as usize, (v / cell) as usize);
                if ink(shape, col, row) {
                    let local = (u - (col as f64 + 0.5) * cell, v - (row as f64 + 0.5) * cell);
                    let l = rotate(local, -rotation_texture);
                    let su = l.0 / small + GLYPH_W as f64 / 2.0;
                    let sv = l.1 / small + GLYPH_H as f64 / 2.0;
                    if su >= 0.0 && sv >= 0.0 && ink(texture, su as usize, sv as usize) {
                        value = INK;
                    }
                }
            }
            pixels.extend_from_slice(&[value; 3]);
        }
    }
    Ok(ImageExample {
        height: n,
        width: n,
        pixels,
        shape_id: shape,
        texture_id: texture,
        color_id: None,
        render_seed,
        rotation_shape,
        rotation_texture,
        position: (ox, oy),
    })
}

pub fn render_item(item: &NavonItem, spec: &NavonSpec) -> Result<ImageExample> {
    render_navon(item.shape, item.texture, item.position, item.render_seed, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn enumeration_count() {
        let items = enumerate(&NavonSpec::default()).unwrap();
        assert_eq!(items.len(), 3250);
        let keys: BTreeSet<(usize, usize, usize)> = items.iter().map(|i| (i.shape, i.texture, i.position)).collect();
        assert_eq!(keys.len(), 3250);
        assert!(items.iter().all(|i| i.shape != i.texture));
    }

    #[test]
    fn same_letter_excluded() {
        assert!(matches!(
            render_navon(3, 3, 0, 1, &NavonSpec::default()),
            Err(Error::ExcludedCombination(_))
        ));
    }

    #[test]
    fn deterministic_and_inked() {
        let spec = NavonSpec {
            image_size: 64,
            ..NavonSpec::default()
        };
        let a = render_navon(7, 0, 2, 11, &spec).unwrap();
        assert_eq!(a, render_navon(7, 0, 2, 11, &spec).unwrap());
        let inked = a.pixels.iter().filter(|&&v| v == INK).count() / 3;
        assert!(inked > 50, "{inked}");
        // border stays blank
        for i in 0..64 {
            assert_eq!(a.pixel(0, i), [BLANK; 3]);
            assert_eq!(a.pixel(i, 63), [BLANK; 3]);
        }
    }
}
