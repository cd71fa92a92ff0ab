//! Experiment runner: config parsing, seeded experiment drivers and CSV
//! output. Each `run_*` function returns a typed report and, when the config
//! names an output directory, writes one run log per training run plus a
//! `summary.csv`.

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

mod config;
mod equivalence;
mod hpsearch;
mod response;
mod runlog;
mod sweeps;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

pub use config::{
    is_known_key, ConfigError, DatasetSpec, EquivalenceSpec, ExperimentConfig, ExperimentKind, HpSearchSpec,
    SweepSpec, TraceSpec, View, FILTERED_TUNABLES, LATENT_TUNABLES, RUN_KEYS,
};
pub use equivalence::{run_equivalence, stream_flip_agreement, EquivalenceReport, FlipAgreement};
pub use hpsearch::{run_hpsearch, HpSearchReport, Trial};
pub use response::{run_filter_response, FilterResponseReport};
pub use runlog::{runlog_file_name, write_runlog, Table, RUNLOG_HEADER};
pub use sweeps::{
    run_alpha_decay, run_alpha_sweep, run_lr_sensitivity, run_lr_vs_init, AlphaDecayReport, AlphaSweepReport,
    LrSensitivityReport, LrVsInitReport, ScalePair, SensitivityCurve,
};

use crate::binopt::OptimError;
use crate::iir::IirError;
use crate::tinynet::{
    load_csv, make_blobs, train, BinaryOptimizerConfig, DataError, Dataset, TrainConfig, TrainError, TrainLog,
};

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Filter(#[from] IirError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("mismatched configuration: {0}")]
    Mismatch(String),
    #[error("invalid experiment input: {0}")]
    Invalid(String),
}

/// One finished training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub name: String,
    pub config: TrainConfig,
    pub log: TrainLog,
    /// Wall-clock seconds; kept out of every CSV except `timing.csv`.
    pub seconds: f64,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, ExpError> {
    Ok(match &cfg.dataset {
        DatasetSpec::Blobs { n_per_class, n_classes, dim, noise, seed } => {
            make_blobs(*n_per_class, *n_classes, *dim, *noise, *seed)?
        }
        DatasetSpec::Csv { path, label_column, test_fraction } => load_csv(path, label_column, *test_fraction)?,
    })
}

/// The binary optimizer selected by `cfg.view`.
pub fn view_optimizer(cfg: &ExperimentConfig) -> BinaryOptimizerConfig {
    match cfg.view {
        View::Latent => BinaryOptimizerConfig::Latent(cfg.latent.clone()),
        View::Filtered => BinaryOptimizerConfig::Filtered(cfg.filtered.clone()),
    }
}

pub fn train_config(cfg: &ExperimentConfig, binary: BinaryOptimizerConfig) -> TrainConfig {
    TrainConfig {
        binary,
        real: cfg.real.clone(),
        hidden: cfg.hidden.clone(),
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        track: None,
        record_flip_events: false,
    }
}

/// Maps `f` over `items` on `jobs` threads, keeping input order.
pub(crate) fn par_map<T, R, F>(jobs: usize, items: Vec<T>, f: F) -> Result<Vec<R>, ExpError>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    if jobs <= 1 {
        return Ok(items.into_iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| items.into_par_iter().map(f).collect()))
}

pub(crate) fn run_all(
    cfg: &ExperimentConfig,
    data: &Dataset,
    runs: Vec<(String, TrainConfig)>,
) -> Result<Vec<RunRecord>, ExpError> {
    par_map(cfg.jobs, runs, |(name, tc)| {
        let start = Instant::now();
        let log = train(&tc, data)?;
        Ok(RunRecord { name, config: tc, log, seconds: start.elapsed().as_secs_f64() })
    })?
    .into_iter()
    .collect()
}

/// Writes run logs, `summary.csv` and `timing.csv` when an output directory is set.
pub(crate) fn persist(
    cfg: &ExperimentConfig,
    runs: &[RunRecord],
    summary: &Table,
    extra: &[(&str, &Table)],
) -> Result<Option<PathBuf>, ExpError> {
    let Some(dir) = cfg.out.as_deref() else {
        return Ok(None);
    };
    let echo = cfg.echo();
    for r in runs {
        write_runlog(dir, &r.name, cfg.seed, &run_echo(&echo, &r.config), &r.log)?;
    }
    summary.write(&dir.join("summary.csv"))?;
    for (file, table) in extra {
        table.write(&dir.join(file))?;
    }
    let mut timing = Table::new(&["run", "wall_clock_s"]);
    for r in runs {
        timing.push(row![r.name, r.seconds]);
    }
    timing.write(&dir.join("timing.csv"))?;
    Ok(Some(dir.to_path_buf()))
}

/// Experiment config echo followed by the effective optimizer settings of one run.
fn run_echo(base: &[(String, String)], tc: &TrainConfig) -> Vec<(String, String)> {
    let mut e = base.to_vec();
    let mut push = |k: &str, v: String| e.push((format!("run.{k}"), v));
    push("seed", tc.seed.to_string());
    push("epochs", tc.epochs.to_string());
    match &tc.binary {
        BinaryOptimizerConfig::Latent(h) => {
            push("view", "latent".into());
            push("epsilon", h.epsilon.to_string());
            push("epsilon_decay", h.epsilon_decay.to_string());
            push("w0_scale", h.w0_scale.to_string());
            push("gamma", h.gamma.to_string());
            push("lambda", h.lambda.to_string());
            push("scaling", h.scaling.to_string());
            push("clipping", h.clipping.to_string());
        }
        BinaryOptimizerConfig::Filtered(h) => {
            push("view", "filtered".into());
            push("alpha", h.alpha.to_string());
            push("alpha_decay", h.alpha_decay.to_string());
            push("gamma", h.gamma.to_string());
        }
    }
    e
}

/// Result of a plain training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub run: RunRecord,
    pub out: Option<PathBuf>,
}

pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainReport, ExpError> {
    let data = load_dataset(cfg)?;
    let runs = run_all(cfg, &data, vec![(cfg.run_name(), train_config(cfg, view_optimizer(cfg)))])?;
    let mut summary = Table::new(&["epoch", "train_loss_nats", "train_accuracy_frac", "test_accuracy_frac"]);
    for e in &runs[0].log.epochs {
        summary.push(row![e.epoch, e.train_loss, e.train_accuracy, e.test_accuracy]);
    }
    let out = persist(cfg, &runs, &summary, &[])?;
    Ok(TrainReport { run: runs.into_iter().next().expect("one run"), out })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Equivalence(EquivalenceReport),
    FilterResponse(FilterResponseReport),
    LrVsInit(LrVsInitReport),
    LrSensitivity(LrSensitivityReport),
    AlphaSweep(AlphaSweepReport),
    AlphaDecay(AlphaDecayReport),
    HpSearch(HpSearchReport),
    Train(TrainReport),
}

impl Report {
    /// Human-readable result lines.
    pub fn lines(&self) -> Vec<String> {
        match self {
            Report::Equivalence(r) => r.lines(),
            Report::FilterResponse(r) => r.lines(),
            Report::LrVsInit(r) => r.lines(),
            Report::LrSensitivity(r) => r.lines(),
            Report::AlphaSweep(r) => r.lines(),
            Report::AlphaDecay(r) => r.lines(),
            Report::HpSearch(r) => r.lines(),
            Report::Train(r) => {
                let e = r.run.log.final_epoch();
                vec![format!(
                    "{}: {} steps, final train accuracy {:.4}, test accuracy {:.4}",
                    r.run.name, r.run.log.total_steps, e.train_accuracy, e.test_accuracy
                )]
            }
        }
    }
}

/// Runs the experiment named in the config.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, ExpError> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        ExperimentKind::Equivalence => Report::Equivalence(run_equivalence(cfg)?),
        ExperimentKind::FilterResponse => Report::FilterResponse(run_filter_response(cfg)?),
        ExperimentKind::LrVsInit => Report::LrVsInit(run_lr_vs_init(cfg)?),
        ExperimentKind::LrSensitivity => Report::LrSensitivity(run_lr_sensitivity(cfg)?),
        ExperimentKind::AlphaSweep => Report::AlphaSweep(run_alpha_sweep(cfg)?),
        ExperimentKind::AlphaDecay => Report::AlphaDecay(run_alpha_decay(cfg)?),
        ExperimentKind::HpSearch => Report::HpSearch(run_hpsearch(cfg)?),
        ExperimentKind::Train => Report::Train(run_train(cfg)?),
    })
}
