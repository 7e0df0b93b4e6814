//! Point-in-polygon rasterization and 2-D rotation helpers.

pub type Point = (f64, f64);

/// Rotates `p` by `degrees` counter-clockwise about the origin.
pub fn rotate(p: Point, degrees: f64) -> Point {
    let (s, c) = degrees.to_radians().sin_cos();
    (c * p.0 - s * p.1, s * p.0 + c * p.1)
}

/// Even-odd rule containment test.
pub fn contains(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > p.1) != (yj > p.1) {
            let x_cross = xj + (p.1 - yj) * (xi - xj) / (yi - yj);
            if p.0 < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Regular polygon with `n` vertices on the unit circle, first vertex up.
pub fn regular(n: usize, radius: f64, phase_degrees: f64) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let a = (phase_degrees + 90.0 + 360.0 * k as f64 / n as f64).to_radians();
            (radius * a.cos(), radius * a.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_containment() {
        let sq = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        assert!(contains(&sq, (0.0, 0.0)));
        assert!(contains(&sq, (0.9, -0.9)));
        assert!(!contains(&sq, (1.1, 0.0)));
    }

    #[test]
    fn rotation_quarter_turn() {
        let (x, y) = rotate((1.0, 0.0), 90.0);
        assert!(x.abs() < 1e-15 && (y - 1.0).abs() < 1e-15);
    }
}
