use std::fs::{self, File};
use std::path::{Path, PathBuf};

use super::ExpError;
use crate::tinynet::TrainLog;

/// Column layout shared by every run log.
pub const RUNLOG_HEADER: [&str; 6] = ["record", "step", "epoch", "series", "unit", "value"];

/// File name of one run's log.
pub fn runlog_file_name(name: &str, seed: u64) -> String {
    format!("runlog_{name}_{seed}.csv")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExpError + '_ {
    move |source| ExpError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), ExpError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn writer(path: &Path) -> Result<csv::Writer<File>, ExpError> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes one run as tidy rows: the config echo, per-step flip counts,
/// per-epoch accuracies and the tracked-weight trace. Contains no timing, so
/// the same config and seed give the same bytes.
pub fn write_runlog(
    dir: &Path,
    name: &str,
    seed: u64,
    echo: &[(String, String)],
    log: &TrainLog,
) -> Result<PathBuf, ExpError> {
    ensure_dir(dir)?;
    let path = dir.join(runlog_file_name(name, seed));
    let mut w = writer(&path)?;
    w.write_record(RUNLOG_HEADER)?;
    for (k, v) in echo {
        w.write_record(["config", "", "", k, "", v])?;
    }
    let spe = log.steps_per_epoch.max(1);
    for (rec, layers) in log.flips.iter().zip(&log.layer_flips) {
        let step = rec.step.to_string();
        let epoch = (rec.step / spe + 1).to_string();
        w.write_record(["step", &step, &epoch, "ff_ratio", "flips/weight", &rec.ff_ratio.to_string()])?;
        w.write_record(["step", &step, &epoch, "flips", "count", &rec.flips.to_string()])?;
        for (k, f) in layers.iter().enumerate() {
            w.write_record(["step", &step, &epoch, &format!("flips_layer{k}"), "count", &f.to_string()])?;
        }
    }
    for e in &log.epochs {
        let epoch = e.epoch.to_string();
        w.write_record(["epoch", "", &epoch, "train_loss", "nats", &e.train_loss.to_string()])?;
        w.write_record(["epoch", "", &epoch, "train_accuracy", "fraction", &e.train_accuracy.to_string()])?;
        w.write_record(["epoch", "", &epoch, "test_accuracy", "fraction", &e.test_accuracy.to_string()])?;
    }
    for p in &log.trace {
        let step = p.step.to_string();
        let epoch = (p.step / spe + 1).to_string();
        w.write_record(["trace", &step, &epoch, "grad", "dloss/dtheta", &p.grad.to_string()])?;
        w.write_record(["trace", &step, &epoch, "filtered", "dloss/dtheta", &p.filtered.to_string()])?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

/// A small rectangular CSV with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), ExpError> {
        if let Some(parent) = path.parent() {
            ensure_dir(parent)?;
        }
        let mut w = writer(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(io_err(path))
    }
}
