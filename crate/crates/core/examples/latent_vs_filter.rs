//! Latent-weight SGD and the gradient filter produce the same binary weights
//! when alpha = epsilon * lambda, the latent weights start at zero and
//! neither clipping nor scaling is used.
//!
//! Run with: cargo run --example latent_vs_filter

use bnnfilter::binopt::{
    BinaryOptimizer, FilterConfig, FilterOptimState, LatentConfig, LatentOptimState, Schedule,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (epsilon, lambda, gamma) = (2.0, 0.01, 0.2);
    let (n, steps, seed) = (500, 2000, 42);

    let mut latent = LatentOptimState::new(
        vec![0.0; n],
        LatentConfig::magnitude_independent(Schedule::constant(epsilon), lambda, gamma),
        seed,
    )?;
    let mut filter = FilterOptimState::new(n, FilterConfig::new(Schedule::constant(epsilon * lambda), gamma), seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut grad = vec![0.0; n];
    let (mut flips, mut disagreements) = (0, 0);
    for t in 0..steps {
        grad.iter_mut().for_each(|g| *g = StandardNormal.sample(&mut rng));
        let a = latent.step(&grad, t)?;
        let b = filter.step(&grad, t)?;
        flips += a.count();
        disagreements += a.as_slice().iter().zip(b.as_slice()).filter(|(x, y)| x != y).count();
    }
    println!("{steps} steps x {n} weights: {flips} flips, {disagreements} disagreements");

    // The accumulators differ only by the constant lambda: g = -lambda * w.
    let k = 3;
    println!(
        "weight {k}: latent w = {:.6}, filtered g = {:.6}, -lambda * w = {:.6}",
        latent.latent()[k],
        filter.filtered()[k],
        -lambda * latent.latent()[k]
    );
    println!("binary weights equal: {}", latent.theta() == filter.theta());
    Ok(())
}
