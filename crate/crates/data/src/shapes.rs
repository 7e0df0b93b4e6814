//! The ten shape outlines, as polygons inside the unit disc.

use std::f64::consts::PI;

use crate::raster::{regular, Point};

pub const SHAPE_NAMES: [&str; 10] = [
    "triangle", "square", "circle", "trapezoid", "pentagon", "hexagon", "star", "cross", "heart", "teardrop",
];

/// Outline of shape `id` (y grows downwards in image space, so "up" is -y).
pub fn outline(id: usize) -> Vec<Point> {
    let pts = match id {
        0 => regular(3, 1.0, 0.0),
        1 => regular(4, 1.0, 45.0),
        2 => regular(48, 0.8, 0.0),
        3 => vec![(-0.8, 0.55), (0.8, 0.55), (0.45, -0.55), (-0.45, -0.55)],
        4 => regular(5, 1.0, 0.0),
        5 => regular(6, 1.0, 0.0),
        6 => (0..10)
            .map(|k| {
                let r = if k % 2 == 0 { 1.0 } else { 0.42 };
                let a = PI / 2.0 + PI * k as f64 / 5.0;
                (r * a.cos(), r * a.sin())
            })
            .collect(),
        7 => {
            let (a, b) = (0.3, 0.95);
            vec![
                (-a, -b), (a, -b), (a, -a), (b, -a), (b, a), (a, a),
                (a, b), (-a, b), (-a, a), (-b, a), (-b, -a), (-a, -a),
            ]
        }
        8 => (0..64)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 64.0;
                let x = 16.0 * t.sin().powi(3);
                let y = 13.0 * t.cos() - 5.0 * (2.0 * t).cos() - 2.0 * (3.0 * t).cos() - (4.0 * t).cos();
                (x / 19.0, -(y + 2.5) / 19.0)
            })
            .collect(),
        9 => (0..64)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 64.0;
                // point at the top, round at the bottom
                let x = 0.8 * t.sin() * (t / 2.0).sin().powi(2) * 1.6;
                let y = -t.cos();
                (x * 0.9, y * 0.95)
            })
            .collect(),
        _ => panic!("shape id {id} out of range"),
    };
    // regular() puts the first vertex at +y; flip so it points up in image space
    pts.into_iter().map(|(x, y)| (x, -y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::contains;

    #[test]
    fn outlines_fit_in_unit_disc_and_contain_centre_region() {
        for id in 0..10 {
            let o = outline(id);
            assert!(o.iter().all(|(x, y)| x * x + y * y <= 1.0 + 1e-9), "shape {id}");
            // every shape covers a decent fraction of the disc
            let mut inside = 0;
            for i in 0..40 {
                for j in 0..40 {
                    let p = (-1.0 + (i as f64 + 0.5) / 20.0, -1.0 + (j as f64 + 0.5) / 20.0);
                    inside += contains(&o, p) as usize;
                }
            }
            assert!(inside > 250, "shape {id} covers {inside}");
        }
    }

    #[test]
    fn outlines_differ() {
        let masks: Vec<Vec<bool>> = (0..10)
            .map(|id| {
                let o = outline(id);
                (0..400)
                    .map(|k| contains(&o, (-1.0 + (k % 20) as f64 / 10.0, -1.0 + (k / 20) as f64 / 10.0)))
                    .collect()
            })
            .collect();
        for a in 0..10 {
            for b in a + 1..10 {
                let diff = masks[a].iter().zip(&masks[b]).filter(|(x, y)| x != y).count();
                assert!(diff > 15, "{} vs {}", SHAPE_NAMES[a], SHAPE_NAMES[b]);
            }
        }
    }
}
