//! Counts binary weight flips and compares how a decayed and a constant
//! alpha settle on a synthetic noisy gradient.
//!
//! Run with: cargo run --example flip_ratio

use bnnfilter::binopt::{BinaryOptimizer, FilterConfig, FilterOptimState, Schedule};
use bnnfilter::bitmetrics::{ff_ratio, ff_series_summary, FlipRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = ff_ratio(&[1, 1, -1, -1], &[1, -1, -1, 1])?;
    println!("{} of {} weights flipped, FF ratio {}", r.flips, r.total_weights, r.ff_ratio);

    let (n, steps) = (256, 3000);
    // Each weight has a small true gradient buried in noise.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let drift: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 0.05 } else { -0.05 }).collect();
    let noise = Normal::new(0.0, 1.0)?;
    let stream: Vec<Vec<f64>> = (0..steps)
        .map(|_| drift.iter().map(|d| d + noise.sample(&mut rng)).collect())
        .collect();

    for (label, schedule) in [("cosine", Schedule::cosine(0.01, steps)), ("constant", Schedule::constant(0.01))] {
        let mut opt = FilterOptimState::new(n, FilterConfig::new(schedule, 0.1), 0)?;
        let mut records = Vec::with_capacity(steps);
        for (t, g) in stream.iter().enumerate() {
            let mask = opt.step(g, t)?;
            records.push(FlipRecord::new(t, mask.count(), n));
        }
        let correct = opt.theta().iter().zip(&drift).filter(|(th, d)| f64::from(**th) == -d.signum()).count();
        println!(
            "{label:>8}: final 5% FF ratio {:.2e}, whole run {:.2e}, signs opposing the drift {correct}/{n}",
            ff_series_summary(&records, 0.05)?,
            ff_series_summary(&records, 1.0)?
        );
    }
    Ok(())
}
