use std::path::PathBuf;

use super::{load_dataset, persist, run_all, train_config, ExpError, ExperimentConfig, RunRecord, Table, View};
use crate::binopt::ScheduleKind;
use crate::bitmetrics::ff_series_summary;
use crate::tinynet::{BinaryOptimizerConfig, FilterHyper, LatentHyper, TrainLog};

/// Fraction of the run used for end-of-training flip summaries.
pub const FINAL_WINDOW: f64 = 0.05;

fn mean_ff(log: &TrainLog) -> f64 {
    if log.flips.is_empty() {
        0.0
    } else {
        log.flips.iter().map(|r| r.ff_ratio).sum::<f64>() / log.flips.len() as f64
    }
}

fn window_ff(log: &TrainLog) -> f64 {
    ff_series_summary(&log.flips, FINAL_WINDOW).unwrap_or(0.0)
}

fn first_epoch_ff(log: &TrainLog) -> f64 {
    let n = log.steps_per_epoch.min(log.flips.len());
    if n == 0 {
        0.0
    } else {
        log.flips[..n].iter().map(|r| r.ff_ratio).sum::<f64>() / n as f64
    }
}

/// First step at which two runs' flip events differ, if any.
fn first_divergence(a: &TrainLog, b: &TrainLog) -> Option<usize> {
    let (ea, eb) = (a.flip_events.as_ref()?, b.flip_events.as_ref()?);
    if ea.len() != eb.len() {
        return Some(ea.len().min(eb.len()));
    }
    ea.iter().zip(eb).position(|(x, y)| x != y)
}

fn magnitude_independent(h: &LatentHyper, epsilon: f64, lambda: f64, w0_scale: f64) -> BinaryOptimizerConfig {
    BinaryOptimizerConfig::Latent(LatentHyper {
        epsilon,
        lambda,
        w0_scale,
        scaling: false,
        clipping: false,
        ..h.clone()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalePair {
    pub scale: f64,
    /// Index into `runs` of the run with learning rate `s * epsilon`.
    pub scaled_lr: usize,
    /// Index into `runs` of the run with initial scale `w0 / s`.
    pub scaled_init: usize,
    pub first_divergent_step: Option<usize>,
}

impl ScalePair {
    pub fn identical(&self) -> bool {
        self.first_divergent_step.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrVsInitReport {
    pub runs: Vec<RunRecord>,
    pub pairs: Vec<ScalePair>,
    /// Indices of the zero-init runs, one per scale.
    pub zero_init: Vec<usize>,
    pub zero_init_identical: bool,
    pub out: Option<PathBuf>,
}

impl LrVsInitReport {
    pub fn lines(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .pairs
            .iter()
            .map(|p| {
                format!(
                    "s = {}: mean FF ratio {:.4e} vs {:.4e}, flip sequences identical: {}",
                    p.scale,
                    mean_ff(&self.runs[p.scaled_lr].log),
                    mean_ff(&self.runs[p.scaled_init].log),
                    p.identical()
                )
            })
            .collect();
        v.push(format!("zero init, all learning rates identical: {}", self.zero_init_identical));
        v
    }
}

/// For every scale `s`, trains latent SGD with `(s * epsilon, lambda / s, w0)`
/// and with `(epsilon, lambda, w0 / s)`, plus a zero-init run at `s * epsilon`.
/// Clipping and scaling are forced off; the product `epsilon * lambda` is the
/// same in every run.
pub fn run_lr_vs_init(cfg: &ExperimentConfig) -> Result<LrVsInitReport, ExpError> {
    if let Some(bad) = cfg.sweep.scales.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
        return Err(ExpError::Invalid(format!("scale {bad} must be positive")));
    }
    let data = load_dataset(cfg)?;
    let (eps, lambda, w0) = (cfg.latent.epsilon, cfg.latent.lambda, cfg.latent.w0_scale);
    let name = cfg.run_name();
    let mut specs = Vec::new();
    for &s in &cfg.sweep.scales {
        for (role, e, l, w) in [
            ("lr", eps * s, lambda / s, w0),
            ("init", eps, lambda, w0 / s),
            ("zero", eps * s, lambda / s, 0.0),
        ] {
            let mut tc = train_config(cfg, magnitude_independent(&cfg.latent, e, l, w));
            tc.record_flip_events = true;
            specs.push((format!("{name}-s{s}-{role}"), tc));
        }
    }
    let mut runs = run_all(cfg, &data, specs)?;

    let pairs: Vec<ScalePair> = cfg
        .sweep
        .scales
        .iter()
        .enumerate()
        .map(|(i, &scale)| ScalePair {
            scale,
            scaled_lr: 3 * i,
            scaled_init: 3 * i + 1,
            first_divergent_step: first_divergence(&runs[3 * i].log, &runs[3 * i + 1].log),
        })
        .collect();
    let zero_init: Vec<usize> = (0..cfg.sweep.scales.len()).map(|i| 3 * i + 2).collect();
    let zero_init_identical = zero_init
        .iter()
        .all(|&k| first_divergence(&runs[zero_init[0]].log, &runs[k].log).is_none());
    for r in &mut runs {
        r.log.flip_events = None;
    }

    let mut summary = Table::new(&[
        "run",
        "scale",
        "role",
        "epsilon",
        "lambda",
        "w0_scale",
        "mean_ff_ratio",
        "final_test_accuracy_frac",
        "identical_to_partner",
    ]);
    for (i, p) in pairs.iter().enumerate() {
        for (k, role) in [(p.scaled_lr, "lr"), (p.scaled_init, "init"), (zero_init[i], "zero")] {
            let r = &runs[k];
            let BinaryOptimizerConfig::Latent(h) = &r.config.binary else { unreachable!() };
            let same = if role == "zero" { zero_init_identical } else { p.identical() };
            summary.push(row![
                r.name,
                p.scale,
                role,
                h.epsilon,
                h.lambda,
                h.w0_scale,
                mean_ff(&r.log),
                r.log.final_test_accuracy(),
                same
            ]);
        }
    }
    let out = persist(cfg, &runs, &summary, &[])?;
    Ok(LrVsInitReport { runs, pairs, zero_init, zero_init_identical, out })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve {
    pub setting: &'static str,
    pub accuracies: Vec<f64>,
}

impl SensitivityCurve {
    /// Max minus min final test accuracy across the sweep.
    pub fn spread(&self) -> f64 {
        let max = self.accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.accuracies.iter().copied().fold(f64::INFINITY, f64::min);
        if self.accuracies.is_empty() {
            0.0
        } else {
            max - min
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrSensitivityReport {
    pub epsilons: Vec<f64>,
    /// Standard SGD, magnitude independent, magnitude independent with zero init.
    pub curves: Vec<SensitivityCurve>,
    pub runs: Vec<RunRecord>,
    pub out: Option<PathBuf>,
}

impl LrSensitivityReport {
    pub fn curve(&self, setting: &str) -> Option<&SensitivityCurve> {
        self.curves.iter().find(|c| c.setting == setting)
    }

    pub fn lines(&self) -> Vec<String> {
        self.curves
            .iter()
            .map(|c| {
                let accs: Vec<String> = c.accuracies.iter().map(|a| format!("{a:.4}")).collect();
                format!("{:<22} spread {:.4}  [{}]", c.setting, c.spread(), accs.join(", "))
            })
            .collect()
    }
}

pub const SETTING_STANDARD: &str = "standard";
pub const SETTING_MAGNITUDE_INDEPENDENT: &str = "magnitude-independent";
pub const SETTING_ZERO_INIT: &str = "zero-init";

/// Accuracy against learning rate in three latent settings. Weight decay is
/// rescaled to `epsilon0 * lambda0 / epsilon` at every sweep point. The two
/// non-zero settings initialize with `latent.w0_scale`, or 1 when that is 0.
pub fn run_lr_sensitivity(cfg: &ExperimentConfig) -> Result<LrSensitivityReport, ExpError> {
    let data = load_dataset(cfg)?;
    let product = cfg.latent.epsilon * cfg.latent.lambda;
    let w0 = if cfg.latent.w0_scale > 0.0 { cfg.latent.w0_scale } else { 1.0 };
    let settings = [
        (SETTING_STANDARD, true, w0),
        (SETTING_MAGNITUDE_INDEPENDENT, false, w0),
        (SETTING_ZERO_INIT, false, 0.0),
    ];
    let name = cfg.run_name();
    let mut specs = Vec::new();
    for &(setting, coupled, w) in &settings {
        for &eps in &cfg.sweep.epsilons {
            let h = LatentHyper {
                epsilon: eps,
                lambda: product / eps,
                w0_scale: w,
                scaling: coupled,
                clipping: coupled,
                ..cfg.latent.clone()
            };
            specs.push((format!("{name}-{setting}-eps{eps}"), train_config(cfg, BinaryOptimizerConfig::Latent(h))));
        }
    }
    let runs = run_all(cfg, &data, specs)?;
    let n = cfg.sweep.epsilons.len();
    let curves: Vec<SensitivityCurve> = settings
        .iter()
        .enumerate()
        .map(|(i, &(setting, _, _))| SensitivityCurve {
            setting,
            accuracies: runs[i * n..(i + 1) * n].iter().map(|r| r.log.final_test_accuracy()).collect(),
        })
        .collect();

    let mut summary = Table::new(&["setting", "epsilon", "lambda", "w0_scale", "final_test_accuracy_frac"]);
    for (i, &(setting, _, w)) in settings.iter().enumerate() {
        for (j, &eps) in cfg.sweep.epsilons.iter().enumerate() {
            summary.push(row![setting, eps, product / eps, w, curves[i].accuracies[j]]);
        }
    }
    let out = persist(cfg, &runs, &summary, &[])?;
    Ok(LrSensitivityReport { epsilons: cfg.sweep.epsilons.clone(), curves, runs, out })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweepReport {
    pub alphas: Vec<f64>,
    pub mean_ff: Vec<f64>,
    pub first_epoch_ff: Vec<f64>,
    pub final_accuracy: Vec<f64>,
    pub runs: Vec<RunRecord>,
    pub out: Option<PathBuf>,
}

impl AlphaSweepReport {
    pub fn lines(&self) -> Vec<String> {
        (0..self.alphas.len())
            .map(|i| {
                format!(
                    "alpha {:>8.1e}: mean FF ratio {:.4e}, first epoch {:.4e}, test accuracy {:.4}",
                    self.alphas[i], self.mean_ff[i], self.first_epoch_ff[i], self.final_accuracy[i]
                )
            })
            .collect()
    }
}

/// One filtered run per alpha, all other settings from the config.
pub fn run_alpha_sweep(cfg: &ExperimentConfig) -> Result<AlphaSweepReport, ExpError> {
    let data = load_dataset(cfg)?;
    let name = cfg.run_name();
    let specs = cfg
        .sweep
        .alphas
        .iter()
        .map(|&alpha| {
            let h = FilterHyper { alpha, ..cfg.filtered.clone() };
            (format!("{name}-alpha{alpha}"), train_config(cfg, BinaryOptimizerConfig::Filtered(h)))
        })
        .collect();
    let runs = run_all(cfg, &data, specs)?;
    let mean: Vec<f64> = runs.iter().map(|r| mean_ff(&r.log)).collect();
    let first: Vec<f64> = runs.iter().map(|r| first_epoch_ff(&r.log)).collect();
    let acc: Vec<f64> = runs.iter().map(|r| r.log.final_test_accuracy()).collect();
    let mut summary = Table::new(&[
        "alpha",
        "mean_ff_ratio",
        "first_epoch_ff_ratio",
        "final_window_ff_ratio",
        "final_test_accuracy_frac",
    ]);
    for (i, r) in runs.iter().enumerate() {
        summary.push(row![cfg.sweep.alphas[i], mean[i], first[i], window_ff(&r.log), acc[i]]);
    }
    let out = persist(cfg, &runs, &summary, &[])?;
    Ok(AlphaSweepReport {
        alphas: cfg.sweep.alphas.clone(),
        mean_ff: mean,
        first_epoch_ff: first,
        final_accuracy: acc,
        runs,
        out,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaDecayReport {
    pub decay: RunRecord,
    pub constant: RunRecord,
    /// Mean FF ratio over the last [`FINAL_WINDOW`] of each run.
    pub decay_window_ff: f64,
    pub constant_window_ff: f64,
    pub out: Option<PathBuf>,
}

impl AlphaDecayReport {
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!(
                "final-window FF ratio: decay {:.4e}, constant {:.4e} (ratio {:.4})",
                self.decay_window_ff,
                self.constant_window_ff,
                self.decay_window_ff / self.constant_window_ff
            ),
            format!(
                "final test accuracy: decay {:.4}, constant {:.4}",
                self.decay.log.final_test_accuracy(),
                self.constant.log.final_test_accuracy()
            ),
        ]
    }
}

/// Two runs of the configured view that differ only in the binary
/// optimizer's schedule: the configured decay against a constant one.
pub fn run_alpha_decay(cfg: &ExperimentConfig) -> Result<AlphaDecayReport, ExpError> {
    let (decayed, pair) = match cfg.view {
        View::Filtered => {
            let d = cfg.filtered.clone();
            let c = FilterHyper { alpha_decay: ScheduleKind::Constant, ..d.clone() };
            (d.alpha_decay, (BinaryOptimizerConfig::Filtered(d), BinaryOptimizerConfig::Filtered(c)))
        }
        View::Latent => {
            let d = cfg.latent.clone();
            let c = LatentHyper { epsilon_decay: ScheduleKind::Constant, ..d.clone() };
            (d.epsilon_decay, (BinaryOptimizerConfig::Latent(d), BinaryOptimizerConfig::Latent(c)))
        }
    };
    if decayed == ScheduleKind::Constant {
        return Err(ExpError::Invalid("the configured schedule must decay".into()));
    }
    let data = load_dataset(cfg)?;
    let name = cfg.run_name();
    let specs = vec![
        (format!("{name}-{decayed}"), train_config(cfg, pair.0)),
        (format!("{name}-constant"), train_config(cfg, pair.1)),
    ];
    let mut runs = run_all(cfg, &data, specs)?;
    let mut summary = Table::new(&[
        "run",
        "schedule",
        "first_step_ff_ratio",
        "mean_ff_ratio",
        "final_window_ff_ratio",
        "final_test_accuracy_frac",
    ]);
    for (r, schedule) in runs.iter().zip([decayed, ScheduleKind::Constant]) {
        let first = r.log.flips.first().map_or(0.0, |f| f.ff_ratio);
        summary.push(row![r.name, schedule, first, mean_ff(&r.log), window_ff(&r.log), r.log.final_test_accuracy()]);
    }
    let out = persist(cfg, &runs, &summary, &[])?;
    let constant = runs.pop().expect("two runs");
    let decay = runs.pop().expect("two runs");
    Ok(AlphaDecayReport {
        decay_window_ff: window_ff(&decay.log),
        constant_window_ff: window_ff(&constant.log),
        decay,
        constant,
        out,
    })
}
