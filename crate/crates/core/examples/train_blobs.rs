//! Trains the default blob classifier with the filter optimizer and prints
//! per-epoch accuracy and the flip ratio.

use std::time::Instant;

use bnnfilter::bitmetrics::ff_series_summary;
use bnnfilter::tinynet::{make_blobs, train, BinaryOptimizerConfig, FilterHyper, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = make_blobs(500, 4, 16, 0.3, 0)?;
    let cfg = TrainConfig::new(BinaryOptimizerConfig::Filtered(FilterHyper::default()));
    let start = Instant::now();
    let log = train(&cfg, &data)?;
    for e in log.epochs.iter().step_by(5) {
        println!(
            "epoch {:>3}  loss {:.4}  train {:.3}  test {:.3}",
            e.epoch, e.train_loss, e.train_accuracy, e.test_accuracy
        );
    }
    let last = log.final_epoch();
    println!("final test accuracy {:.3}", last.test_accuracy);
    println!("final 5% mean FF ratio {:.3e}", ff_series_summary(&log.flips, 0.05)?);
    println!("last-step FF ratio {:.3e}", log.flips.last().map_or(0.0, |r| r.ff_ratio));
    eprintln!("{} steps in {:.2?}", log.total_steps, start.elapsed());
    Ok(())
}
