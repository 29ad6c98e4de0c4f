//! Laplace mechanism primitives.

use rand::Rng;

/// One draw from `Laplace(0, scale)` by inverse-CDF sampling. A zero scale
/// yields exactly zero.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

/// Adds `Laplace(sensitivity / epsilon)` noise to every count. An infinite
/// epsilon releases the counts unchanged.
pub fn noisy_counts<R: Rng + ?Sized>(rng: &mut R, counts: &[f64], epsilon: f64, sensitivity: f64) -> Vec<f64> {
    let scale = if epsilon.is_infinite() { 0.0 } else { sensitivity / epsilon };
    counts.iter().map(|&c| c + sample_laplace(rng, scale)).collect()
}

/// Clamps negatives to zero and renormalizes; an all-zero vector becomes uniform.
pub fn clamp_normalize(v: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total > 0.0 {
        clamped.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / v.len().max(1) as f64; v.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_variance_is_two_b_squared() {
        let mut rng = crate::seed::rng(42);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_laplace(&mut rng, 1.0)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((1.9..=2.1).contains(&var), "variance {var}");
    }

    #[test]
    fn infinite_epsilon_adds_nothing() {
        let mut rng = crate::seed::rng(1);
        assert_eq!(noisy_counts(&mut rng, &[60.0, 40.0], f64::INFINITY, 1.0), vec![60.0, 40.0]);
    }

    #[test]
    fn normalization() {
        assert_eq!(clamp_normalize(&[-1.0, 3.0, 1.0]), vec![0.0, 0.75, 0.25]);
        assert_eq!(clamp_normalize(&[-1.0, -2.0]), vec![0.5, 0.5]);
    }
}
