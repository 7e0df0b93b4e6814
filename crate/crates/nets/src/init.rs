use featlab_core::Rng;

/// `count` weights drawn uniformly from `[-b, b]` with `b = sqrt(1 / fan_in)`.
pub fn fan_in_uniform(rng: &mut Rng, fan_in: usize, count: usize) -> Vec<f64> {
    let bound = (1.0 / fan_in as f64).sqrt();
    (0..count).map(|_| rng.uniform_range(-bound, bound)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_mean_near_zero() {
        let n = 10_000;
        let w = fan_in_uniform(&mut Rng::seed_from(1), 16, n);
        let b = 0.25;
        assert!(w.iter().all(|v| v.abs() <= b));
        let mean = w.iter().sum::<f64>() / n as f64;
        // uniform on [-b, b] has sd b/sqrt(3)
        let sd = b / 3f64.sqrt();
        assert!(mean.abs() <= 3.0 * sd / (n as f64).sqrt(), "mean {mean}");
    }
}
