use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{load_dataset, persist, run_all, train_config, view_optimizer, ExpError, ExperimentConfig, Table};
use crate::iir::{make_ema, make_second_order_bnn, LinearFilter};
use crate::tinynet::TrackedWeight;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResponseReport {
    /// First step of the filtered window in the training run (0 for synthetic streams).
    pub first_step: usize,
    pub raw: Vec<f64>,
    pub ema: Vec<f64>,
    pub second_order: Vec<f64>,
    /// Multipliers that bring each filter output to the raw peak magnitude.
    pub ema_rescale: f64,
    pub second_order_rescale: f64,
    pub var_raw: f64,
    pub var_ema: f64,
    pub var_second_order: f64,
    pub out: Option<PathBuf>,
}

impl FilterResponseReport {
    pub fn ordering_holds(&self) -> bool {
        self.var_second_order < self.var_ema && self.var_ema < self.var_raw
    }

    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("{} gradient samples", self.raw.len()),
            format!(
                "variance raw {:.6e}, first order {:.6e}, second order {:.6e}",
                self.var_raw, self.var_ema, self.var_second_order
            ),
            format!("ordering second < first < raw: {}", self.ordering_holds()),
        ]
    }
}

/// Population variance; zero for an empty slice.
pub(crate) fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |p, v| p.max(v.abs()))
}

fn rescale_factor(raw: &[f64], out: &[f64]) -> f64 {
    let p = peak(out);
    if p > 0.0 {
        peak(raw) / p
    } else {
        1.0
    }
}

fn synthetic_stream(cfg: &ExperimentConfig) -> Vec<f64> {
    let t = &cfg.trace;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..t.steps)
        .map(|k| {
            let z: f64 = StandardNormal.sample(&mut rng);
            t.amplitude * (std::f64::consts::TAU * k as f64 / t.period).sin() + t.noise * z
        })
        .collect()
}

/// Filters one tracked weight's gradient stream with a first-order EMA and
/// with the second-order filter, both using `trace.alpha` for every discount.
///
/// The stream is the raw minibatch gradient of weight `trace.weight` in
/// binary layer `trace.layer` during epoch `trace.epoch` of a training run,
/// or a sinusoid plus white noise when `trace.synthetic` is set.
pub fn run_filter_response(cfg: &ExperimentConfig) -> Result<FilterResponseReport, ExpError> {
    let t = &cfg.trace;
    let (raw, first_step, runs) = if t.synthetic {
        (synthetic_stream(cfg), 0, Vec::new())
    } else {
        if t.epoch > cfg.epochs {
            return Err(ExpError::Invalid(format!(
                "trace.epoch = {} but the run has {} epochs",
                t.epoch, cfg.epochs
            )));
        }
        let data = load_dataset(cfg)?;
        let mut tc = train_config(cfg, view_optimizer(cfg));
        tc.track = Some(TrackedWeight { layer: t.layer, index: t.weight });
        let runs = run_all(cfg, &data, vec![(cfg.run_name(), tc)])?;
        let log = &runs[0].log;
        let first = (t.epoch - 1) * log.steps_per_epoch;
        let raw: Vec<f64> = log.trace[first..first + log.steps_per_epoch].iter().map(|p| p.grad).collect();
        (raw, first, runs)
    };

    let ema = LinearFilter::filter_stream(&make_ema(t.alpha)?, &raw);
    let second_order = LinearFilter::filter_stream(&make_second_order_bnn(t.alpha, t.alpha)?, &raw);
    let ema_rescale = rescale_factor(&raw, &ema);
    let second_order_rescale = rescale_factor(&raw, &second_order);

    let mut trace = Table::new(&[
        "step",
        "raw_grad",
        "first_order",
        "second_order",
        "first_order_rescaled",
        "second_order_rescaled",
    ]);
    for (k, ((r, e), s)) in raw.iter().zip(&ema).zip(&second_order).enumerate() {
        trace.push(row![first_step + k, r, e, s, e * ema_rescale, s * second_order_rescale]);
    }
    let report = FilterResponseReport {
        first_step,
        var_raw: variance(&raw),
        var_ema: variance(&ema),
        var_second_order: variance(&second_order),
        raw,
        ema,
        second_order,
        ema_rescale,
        second_order_rescale,
        out: None,
    };
    let mut summary = Table::new(&["series", "variance", "rescale_factor"]);
    summary.push(row!["raw_grad", report.var_raw, 1.0]);
    summary.push(row!["first_order", report.var_ema, ema_rescale]);
    summary.push(row!["second_order", report.var_second_order, second_order_rescale]);
    let out = persist(cfg, &runs, &summary, &[("trace.csv", &trace)])?;
    Ok(FilterResponseReport { out, ..report })
}
