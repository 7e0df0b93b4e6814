//! The ten binary texture masks and the colour palette.
//!
//! Masks are functions of continuous texture-plane coordinates in pixels,
//! periodic with the given period, so they tile at any resolution.

pub const TEXTURE_NAMES: [&str; 10] = [
    "solid", "stripes-h", "stripes-v", "dots", "checks", "grid", "zigzag", "rings", "blobs", "hatch",
];

pub const COLOR_NAMES: [&str; 10] = [
    "red", "orange", "yellow", "green", "teal", "blue", "purple", "pink", "brown", "black",
];

pub const COLORS: [[f64; 3]; 10] = [
    [0.9, 0.1, 0.1],
    [1.0, 0.55, 0.0],
    [0.95, 0.95, 0.1],
    [0.1, 0.7, 0.2],
    [0.0, 0.6, 0.6],
    [0.15, 0.25, 0.9],
    [0.55, 0.15, 0.75],
    [1.0, 0.5, 0.75],
    [0.45, 0.25, 0.1],
    [0.0, 0.0, 0.0],
];

pub const BACKGROUND: [f64; 3] = [0.5, 0.5, 0.5];

fn frac(v: f64) -> f64 {
    v - v.floor()
}

fn cell_hash(i: i64, j: i64) -> u64 {
    let mut z = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Whether texture `id` is "on" at texture-plane point `(u, v)`.
pub fn texture_on(id: usize, u: f64, v: f64, period: f64) -> bool {
    let (a, b) = (u / period, v / period);
    match id {
        0 => true,
        1 => frac(b) < 0.5,
        2 => frac(a) < 0.5,
        3 => {
            let (du, dv) = (frac(a) - 0.5, frac(b) - 0.5);
            du * du + dv * dv < 0.12
        }
        4 => ((a * 2.0).floor() as i64 + (b * 2.0).floor() as i64).rem_euclid(2) == 0,
        5 => frac(a) < 0.34 || frac(b) < 0.34,
        6 => {
            let tri = (frac(a) - 0.5).abs();
            frac(b + tri) < 0.5
        }
        7 => {
            let (du, dv) = (frac(a / 1.5) - 0.5, frac(b / 1.5) - 0.5);
            let r = (du * du + dv * dv).sqrt();
            (0.2..0.42).contains(&r)
        }
        8 => cell_hash((a.floor() as i64).rem_euclid(4), (b.floor() as i64).rem_euclid(4)) & 1 == 1,
        9 => frac((a + b) / 1.5) < 0.25,
        _ => panic!("texture id {id} out of range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coverage(id: usize) -> f64 {
        let mut on = 0;
        for i in 0..120 {
            for j in 0..120 {
                on += texture_on(id, i as f64 * 0.25 + 0.1, j as f64 * 0.25 + 0.1, 3.0) as usize;
            }
        }
        on as f64 / 14400.0
    }

    #[test]
    fn textures_are_neither_empty_nor_full() {
        assert_eq!(coverage(0), 1.0);
        for id in 1..10 {
            let c = coverage(id);
            assert!((0.15..0.85).contains(&c), "{} coverage {c}", TEXTURE_NAMES[id]);
        }
    }

    #[test]
    fn textures_are_periodic() {
        for id in 0..10 {
            for k in 0..50 {
                let (u, v) = (k as f64 * 0.37, k as f64 * 0.61);
                // blobs repeat every 4 cells, rings and hatch every 1.5
                assert_eq!(texture_on(id, u, v, 2.0), texture_on(id, u + 24.0, v + 24.0, 2.0), "{id}");
            }
        }
    }
}
