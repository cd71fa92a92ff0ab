use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{load_dataset, persist, run_all, train_config, ExpError, ExperimentConfig, RunRecord, Table, View};
use crate::tinynet::{BinaryOptimizerConfig, FilterHyper, LatentHyper};

/// Log-uniform range shared by epsilon, lambda, alpha and gamma.
pub const RATE_RANGE: (f64, f64) = (1e-5, 1.0);
/// Log-uniform range of the latent initialization scale.
pub const W0_RANGE: (f64, f64) = (1e-3, 10.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub view: View,
    pub repeat: usize,
    pub index: usize,
    pub binary: BinaryOptimizerConfig,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpSearchReport {
    pub trials_per_search: usize,
    pub repeats: usize,
    /// Best-so-far test accuracy after each trial, averaged over repeats.
    pub latent_curve: Vec<f64>,
    pub filtered_curve: Vec<f64>,
    /// Mean number of trials until a search is within one point of its own final best.
    pub latent_trials_to_best: f64,
    pub filtered_trials_to_best: f64,
    pub trials: Vec<Trial>,
    pub runs: Vec<RunRecord>,
    pub out: Option<PathBuf>,
}

impl HpSearchReport {
    pub fn lines(&self) -> Vec<String> {
        let last = |c: &[f64]| c.last().copied().unwrap_or(0.0);
        vec![
            format!(
                "latent view ({} tunables searched): mean best {:.4}, trials to within 1 point {:.2}",
                6,
                last(&self.latent_curve),
                self.latent_trials_to_best
            ),
            format!(
                "filtered view ({} tunables searched): mean best {:.4}, trials to within 1 point {:.2}",
                2,
                last(&self.filtered_curve),
                self.filtered_trials_to_best
            ),
        ]
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

/// Samples every latent tunable except the decay kind, which stays as configured.
fn sample_latent(rng: &mut ChaCha8Rng, base: &LatentHyper) -> LatentHyper {
    LatentHyper {
        epsilon: log_uniform(rng, RATE_RANGE),
        epsilon_decay: base.epsilon_decay,
        w0_scale: log_uniform(rng, W0_RANGE),
        gamma: log_uniform(rng, RATE_RANGE),
        lambda: log_uniform(rng, RATE_RANGE),
        scaling: rng.random_bool(0.5),
        clipping: rng.random_bool(0.5),
    }
}

fn sample_filtered(rng: &mut ChaCha8Rng, base: &FilterHyper) -> FilterHyper {
    FilterHyper {
        alpha: log_uniform(rng, RATE_RANGE),
        alpha_decay: base.alpha_decay,
        gamma: log_uniform(rng, RATE_RANGE),
    }
}

fn best_so_far(acc: &[f64]) -> Vec<f64> {
    acc.iter()
        .scan(f64::NEG_INFINITY, |b, &a| {
            *b = b.max(a);
            Some(*b)
        })
        .collect()
}

/// 1-based count of trials until `curve` is within 0.01 of its last value.
fn trials_to_within_one_point(curve: &[f64]) -> usize {
    let target = curve.last().copied().unwrap_or(0.0) - 0.01;
    curve.iter().position(|&b| b >= target).map_or(0, |i| i + 1)
}

/// Random search over each view's tunables with the same trial budget.
/// Repeat `r` trains every trial with seed `seed + r`, so both views see the
/// same initial networks and data order.
pub fn run_hpsearch(cfg: &ExperimentConfig) -> Result<HpSearchReport, ExpError> {
    let hp = &cfg.hpsearch;
    let data = load_dataset(cfg)?;
    let name = cfg.run_name();
    let mut specs = Vec::new();
    let mut meta = Vec::new();
    for (v, view) in [View::Latent, View::Filtered].into_iter().enumerate() {
        for r in 0..hp.repeats {
            let stream = (v as u64 + 1) << 32 | r as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            for t in 0..hp.trials {
                let binary = match view {
                    View::Latent => BinaryOptimizerConfig::Latent(sample_latent(&mut rng, &cfg.latent)),
                    View::Filtered => BinaryOptimizerConfig::Filtered(sample_filtered(&mut rng, &cfg.filtered)),
                };
                let mut tc = train_config(cfg, binary.clone());
                tc.epochs = hp.epochs;
                tc.seed = cfg.seed.wrapping_add(r as u64);
                specs.push((format!("{name}-{}-r{r}-t{t}", view.as_str()), tc));
                meta.push((view, r, t, binary));
            }
        }
    }
    let runs = run_all(cfg, &data, specs)?;
    let trials: Vec<Trial> = meta
        .into_iter()
        .zip(&runs)
        .map(|((view, repeat, index, binary), run)| Trial {
            view,
            repeat,
            index,
            binary,
            accuracy: run.log.final_test_accuracy(),
        })
        .collect();

    let curves = |view: View| -> (Vec<f64>, f64) {
        let mut mean = vec![0.0; hp.trials];
        let mut to_best = 0.0;
        for r in 0..hp.repeats {
            let acc: Vec<f64> = trials
                .iter()
                .filter(|t| t.view == view && t.repeat == r)
                .map(|t| t.accuracy)
                .collect();
            let curve = best_so_far(&acc);
            for (m, b) in mean.iter_mut().zip(&curve) {
                *m += b / hp.repeats as f64;
            }
            to_best += trials_to_within_one_point(&curve) as f64 / hp.repeats as f64;
        }
        (mean, to_best)
    };
    let (latent_curve, latent_trials_to_best) = curves(View::Latent);
    let (filtered_curve, filtered_trials_to_best) = curves(View::Filtered);

    let mut summary = Table::new(&["view", "trial", "mean_best_so_far_accuracy_frac"]);
    for (view, curve) in [(View::Latent, &latent_curve), (View::Filtered, &filtered_curve)] {
        for (t, b) in curve.iter().enumerate() {
            summary.push(row![view.as_str(), t + 1, b]);
        }
    }
    let mut table = Table::new(&[
        "view",
        "repeat",
        "trial",
        "epsilon",
        "epsilon_decay",
        "w0_scale",
        "lambda",
        "scaling",
        "clipping",
        "alpha",
        "alpha_decay",
        "gamma",
        "final_test_accuracy_frac",
    ]);
    for t in &trials {
        let mut r = row![t.view.as_str(), t.repeat, t.index + 1];
        match &t.binary {
            BinaryOptimizerConfig::Latent(h) => r.extend(row![
                h.epsilon, h.epsilon_decay, h.w0_scale, h.lambda, h.scaling, h.clipping, "", "", h.gamma
            ]),
            BinaryOptimizerConfig::Filtered(h) => {
                r.extend(row!["", "", "", "", "", "", h.alpha, h.alpha_decay, h.gamma])
            }
        }
        r.push(t.accuracy.to_string());
        table.push(r);
    }
    let out = persist(cfg, &runs, &summary, &[("trials.csv", &table)])?;
    Ok(HpSearchReport {
        trials_per_search: hp.trials,
        repeats: hp.repeats,
        latent_curve,
        filtered_curve,
        latent_trials_to_best,
        filtered_trials_to_best,
        trials,
        runs,
        out,
    })
}
