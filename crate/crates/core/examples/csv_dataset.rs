//! Round-trips a dataset through CSV and trains on the loaded copy with the
//! latent-weight view.
//!
//! Run with: cargo run --release --example csv_dataset

use bnnfilter::binopt::ScheduleKind;
use bnnfilter::tinynet::{load_csv, make_blobs, train, BinaryOptimizerConfig, LatentHyper, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("bnnfilter-csv-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("blobs.csv");

    make_blobs(200, 3, 6, 0.35, 11)?.save_csv(&path, "label")?;
    let data = load_csv(&path, "label", 0.2)?;
    println!(
        "{}: {} features {:?}, {} train / {} test rows, {} classes",
        path.display(),
        data.dim,
        data.feature_names,
        data.n_train(),
        data.n_test(),
        data.n_classes
    );

    let binary = BinaryOptimizerConfig::Latent(LatentHyper {
        epsilon: 1.0,
        epsilon_decay: ScheduleKind::Cosine,
        w0_scale: 0.0,
        gamma: 0.1,
        lambda: 1e-3,
        scaling: false,
        clipping: false,
    });
    let cfg = TrainConfig { hidden: vec![32, 32], epochs: 20, batch_size: 32, ..TrainConfig::new(binary) };
    let log = train(&cfg, &data)?;
    let last = log.final_epoch();
    println!("after {} epochs: train {:.3}, test {:.3}", last.epoch, last.train_accuracy, last.test_accuracy);
    Ok(())
}
