//! Brute-force references for the latent-weight recursion.

use super::{BinaryOptimizer, LatentConfig, LatentOptimState, OptimError, Schedule};

/// Accumulated negative gradients of latent SGD, evaluated as an explicit sum.
///
/// With `g0` the accumulator before the first update (`g0 = -w0`) and
/// `m_r` the momentum after gradient `r`, the value after `k + 1` updates is
///
/// ```text
/// out[k] = (1 - eps*lambda)^(k+1) * g0 + eps * sum_{r=0..=k} (1 - eps*lambda)^(k-r) * m_r
/// ```
///
/// Each entry is recomputed from scratch, so this is quadratic in the stream
/// length and only meant as a test oracle.
pub fn unrolled_oracle(grads: &[f64], epsilon: f64, lambda: f64, gamma: f64, g0: f64) -> Vec<f64> {
    let mut m = Vec::with_capacity(grads.len());
    let mut prev = 0.0;
    for &g in grads {
        prev = (1.0 - gamma) * prev + gamma * g;
        m.push(prev);
    }
    let decay = 1.0 - epsilon * lambda;
    (0..grads.len())
        .map(|k| {
            let mut sum = 0.0;
            for (r, m_r) in m.iter().enumerate().take(k + 1) {
                sum += decay.powi((k - r) as i32) * m_r;
            }
            decay.powi(k as i32 + 1) * g0 + epsilon * sum
        })
        .collect()
}

fn theta_trace(
    grads: &[Vec<f64>],
    epsilon: f64,
    lambda: f64,
    gamma: f64,
    w0: Vec<f64>,
    seed: u64,
) -> Result<Vec<Vec<i8>>, OptimError> {
    let cfg = LatentConfig::magnitude_independent(Schedule::constant(epsilon), lambda, gamma);
    let mut opt = LatentOptimState::new(w0, cfg, seed)?;
    let mut out = Vec::with_capacity(grads.len() + 1);
    out.push(opt.theta().to_vec());
    for (t, g) in grads.iter().enumerate() {
        opt.latent_step(g, t)?;
        out.push(opt.theta().to_vec());
    }
    Ok(out)
}

/// Checks that multiplying the learning rate by `s` is the same, sign for
/// sign, as dividing the initial accumulator `g0` by `s`.
///
/// The decay factor `1 - eps*lambda` is held fixed across the pair (weight
/// decay is scaled by `1/s` alongside the learning rate), so the two runs
/// differ only in the constant in front of the sum. Both runs share the
/// tie-break seed.
pub fn scale_equivalence_check(
    grads: &[Vec<f64>],
    epsilon: f64,
    lambda: f64,
    gamma: f64,
    g0: &[f64],
    s: f64,
    seed: u64,
) -> Result<bool, OptimError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(OptimError::InvalidHyperparameter(format!("scale {s} must be positive")));
    }
    let scaled_lr = theta_trace(grads, epsilon * s, lambda / s, gamma, g0.iter().map(|g| -g).collect(), seed)?;
    let scaled_init = theta_trace(grads, epsilon, lambda, gamma, g0.iter().map(|g| -g / s).collect(), seed)?;
    Ok(scaled_lr == scaled_init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binopt::{FilterConfig, FilterOptimState};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_summed_example() {
        let g = unrolled_oracle(&[1.0, 1.0, 1.0], 1.0, 0.1, 1.0, 0.0);
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.9, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], 2.71, epsilon = 1e-14);
    }

    #[test]
    fn window_of_one() {
        let grads = [0.3, -1.0, 2.0, 0.5];
        let (eps, gamma) = (0.5, 0.4);
        let g = unrolled_oracle(&grads, eps, 1.0 / eps, gamma, 5.0);
        let mut m = 0.0;
        for (k, &x) in grads.iter().enumerate() {
            m = (1.0 - gamma) * m + gamma * x;
            assert_abs_diff_eq!(g[k], eps * m, epsilon = 1e-15);
        }
    }

    #[test]
    fn oracle_tracks_latent_recursion_with_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let grads: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (eps, lambda, gamma, g0) = (0.3, 0.2, 0.25, 0.7);
        let oracle = unrolled_oracle(&grads, eps, lambda, gamma, g0);
        let cfg = LatentConfig::magnitude_independent(Schedule::constant(eps), lambda, gamma);
        let mut opt = LatentOptimState::new(vec![-g0], cfg, 0).unwrap();
        for (k, &x) in grads.iter().enumerate() {
            opt.latent_step(&[x], k).unwrap();
            assert_abs_diff_eq!(-opt.latent()[0], oracle[k], epsilon = 1e-13);
        }
    }

    #[test]
    fn oracle_is_filter_times_eps_over_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let grads: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (eps, lambda, gamma) = (2.0, 0.05, 0.1);
        let alpha = eps * lambda;
        let oracle = unrolled_oracle(&grads, eps, lambda, gamma, 0.0);
        let mut f = FilterOptimState::new(1, FilterConfig::new(Schedule::constant(alpha), gamma), 0).unwrap();
        for (k, &x) in grads.iter().enumerate() {
            f.filter_step(&[x], k).unwrap();
            let scaled = f.filtered()[0] * eps / alpha;
            assert!((scaled - oracle[k]).abs() <= 1e-12 * oracle[k].abs().max(1e-6));
        }
    }

    fn stream(seed: u64, steps: usize, n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..steps)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn scaling_lr_equals_inverse_scaling_init() {
        let grads = stream(10, 1000, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g0: Vec<f64> = (0..16).map(|_| rng.random_range(-0.5..0.5)).collect();
        assert!(scale_equivalence_check(&grads, 0.1, 0.01, 0.1, &g0, 10.0, 3).unwrap());
        assert!(scale_equivalence_check(&grads, 0.1, 0.01, 0.1, &g0, 1.0, 3).unwrap());
    }

    #[test]
    fn zero_init_is_lr_independent() {
        let grads = stream(12, 500, 16);
        let g0 = vec![0.0; 16];
        for s in [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3] {
            assert!(scale_equivalence_check(&grads, 0.1, 0.01, 0.1, &g0, s, 5).unwrap(), "s = {s}");
        }
    }

    #[test]
    fn non_positive_scale_rejected() {
        assert!(scale_equivalence_check(&[], 0.1, 0.1, 0.1, &[], 0.0, 0).is_err());
        assert!(scale_equivalence_check(&[], 0.1, 0.1, 0.1, &[], -2.0, 0).is_err());
    }
}
