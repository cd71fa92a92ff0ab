//! First- and second-order IIR filters: coefficient construction, cascading
//! and how much white noise each one lets through.
//!
//! Run with: cargo run --example iir_filters

use bnnfilter::iir::{cascade, impulse_response, make_ema, make_second_order_bnn, LinearFilter};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn variance(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (alpha, gamma) = (0.1, 0.1);

    let ema = make_ema(alpha)?;
    println!("EMA(alpha={alpha}):  b = {:?}, a = {:?}", ema.b(), ema.a());

    let series = cascade(&make_ema(gamma)?, &make_ema(alpha)?);
    let direct = make_second_order_bnn(alpha, gamma)?;
    println!("cascade:        b = {:?}, a = {:?}", series.b(), series.a());
    println!("second order:   b = {:?}, a = {:?}", direct.b(), direct.a());
    println!("identical coefficients: {}", series == direct);

    let h = impulse_response(&direct, 8);
    println!("\nfirst impulse response taps: {h:.5?}");

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let noise: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let once = LinearFilter::filter_stream(&ema, &noise);
    let twice = LinearFilter::filter_stream(&direct, &noise);
    println!("\nwhite-noise variance:");
    println!("  raw           {:.5}", variance(&noise));
    println!("  first order   {:.5}", variance(&once[100..]));
    println!("  second order  {:.5}", variance(&twice[100..]));

    // A multi-element filter keeps one state per element.
    let mut bank = LinearFilter::new(direct, 3);
    let mut out = vec![0.0; 3];
    for _ in 0..200 {
        bank.step_into(&[1.0, -2.0, 0.5], &mut out)?;
    }
    println!("\nconstant inputs after 200 steps: {out:.4?}");
    Ok(())
}
