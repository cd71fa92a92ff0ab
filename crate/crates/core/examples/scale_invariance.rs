//! Signs are all that matter: scaling the learning rate by s has the same
//! effect as dividing the initial latent weights by s, and from a zero
//! initialization the learning rate has no effect at all.
//!
//! Run with: cargo run --example scale_invariance

use bnnfilter::binopt::{scale_equivalence_check, unrolled_oracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grads: Vec<Vec<f64>> =
        (0..400).map(|_| (0..64).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    let g0: Vec<f64> = (0..64).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 0.5 * z }).collect();

    for s in [1e-3, 1e-1, 10.0, 1e3] {
        let same = scale_equivalence_check(&grads, 0.5, 0.02, 0.1, &g0, s, 9)?;
        println!("s = {s:>7}: binary weight sequences identical = {same}");
    }

    // The explicit sum behind it, for one weight and a few steps.
    let stream: Vec<f64> = grads.iter().take(6).map(|g| g[0]).collect();
    for eps in [0.1, 1.0, 10.0] {
        let g = unrolled_oracle(&stream, eps, 0.01 / eps, 0.1, 0.0);
        let signs: String = g.iter().map(|v| if *v > 0.0 { '+' } else { '-' }).collect();
        println!("eps = {eps:>4}, zero init: accumulator signs {signs}, last value {:.5}", g[5]);
    }
    Ok(())
}
