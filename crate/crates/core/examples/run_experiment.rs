//! Runs any experiment from a config file, the same way the CLI does.
//!
//! Run with: cargo run --release --example run_experiment -- configs/alpha_decay.toml [out-dir]

use bnnfilter::expcli::{run, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/alpha_decay.toml").into());
    let mut cfg = ExperimentConfig::from_path(&path)?;
    if let Some(out) = args.next() {
        cfg.out = Some(out.into());
    }
    println!("{} from {path}", cfg.experiment);
    for (k, v) in cfg.echo().iter().filter(|(k, _)| k.starts_with(cfg.view.as_str())) {
        println!("  {k} = {v}");
    }
    for line in run(&cfg)?.lines() {
        println!("{line}");
    }
    Ok(())
}
