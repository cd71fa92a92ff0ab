use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{load_dataset, persist, run_all, train_config, ExpError, ExperimentConfig, RunRecord, Table};
use crate::binopt::{
    BinaryOptimizer, FilterConfig, FilterOptimState, LatentConfig, LatentOptimState, Schedule,
};
use crate::tinynet::{BinaryOptimizerConfig, FilterHyper, LatentHyper};

const STREAM_SALT: u64 = 0x00E9_0001_57AE_A3B1;

/// Flip events of two optimizers over the same (step, weight) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlipAgreement {
    pub pairs: usize,
    /// Pairs where both flipped.
    pub both: usize,
    pub latent_only: usize,
    pub filtered_only: usize,
}

impl FlipAgreement {
    fn add(&mut self, a: &[bool], b: &[bool]) {
        for (&x, &y) in a.iter().zip(b) {
            self.pairs += 1;
            match (x, y) {
                (true, true) => self.both += 1,
                (true, false) => self.latent_only += 1,
                (false, true) => self.filtered_only += 1,
                (false, false) => {}
            }
        }
    }

    /// Shared flip events over all flip events of either side; 1 when neither flips.
    pub fn event_agreement(&self) -> f64 {
        let union = self.both + self.latent_only + self.filtered_only;
        if union == 0 {
            1.0
        } else {
            self.both as f64 / union as f64
        }
    }

    /// Fraction of (step, weight) pairs with the same flip decision.
    pub fn pair_agreement(&self) -> f64 {
        if self.pairs == 0 {
            1.0
        } else {
            1.0 - (self.latent_only + self.filtered_only) as f64 / self.pairs as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub stream_steps: usize,
    pub stream_weights: usize,
    pub stream: FlipAgreement,
    pub train: FlipAgreement,
    /// Per-step event agreement of the training twins.
    pub per_step_agreement: Vec<f64>,
    pub gamma_matched: bool,
    pub latent: RunRecord,
    pub filtered: RunRecord,
    pub out: Option<PathBuf>,
}

impl EquivalenceReport {
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!(
                "random streams ({} steps x {} weights): {} flip events, event agreement {:.6}, pair agreement {:.6}",
                self.stream_steps,
                self.stream_weights,
                self.stream.both + self.stream.latent_only + self.stream.filtered_only,
                self.stream.event_agreement(),
                self.stream.pair_agreement()
            ),
            format!(
                "training twins ({} steps): {} flip events, event agreement {:.6}, pair agreement {:.6}{}",
                self.latent.log.total_steps,
                self.train.both + self.train.latent_only + self.train.filtered_only,
                self.train.event_agreement(),
                self.train.pair_agreement(),
                if self.gamma_matched { "" } else { " (gamma deliberately mismatched)" }
            ),
            format!(
                "final test accuracy: latent {:.4}, filtered {:.4}",
                self.latent.log.final_test_accuracy(),
                self.filtered.log.final_test_accuracy()
            ),
        ]
    }
}

/// The latent settings the filter view is equivalent to: zero init, no
/// clipping, no scaling.
fn magnitude_independent(h: &LatentHyper) -> LatentHyper {
    LatentHyper {
        w0_scale: 0.0,
        scaling: false,
        clipping: false,
        ..h.clone()
    }
}

/// Rejects pairs whose combined discount differs (`alpha != epsilon * lambda`)
/// or whose schedules decay differently. A gamma mismatch is allowed so the
/// divergence can be observed.
fn check_matched(latent: &LatentHyper, filtered: &FilterHyper) -> Result<(), ExpError> {
    let product = latent.epsilon * latent.lambda;
    if (product - filtered.alpha).abs() > 1e-12 * product.abs().max(filtered.alpha.abs()) {
        return Err(ExpError::Mismatch(format!(
            "filtered.alpha = {} but latent.epsilon * latent.lambda = {product}",
            filtered.alpha
        )));
    }
    if latent.epsilon_decay != filtered.alpha_decay {
        return Err(ExpError::Mismatch(format!(
            "latent.epsilon_decay = {} but filtered.alpha_decay = {}",
            latent.epsilon_decay, filtered.alpha_decay
        )));
    }
    Ok(())
}

/// Runs zero-init latent SGD and the filter optimizer side by side on i.i.d.
/// standard normal gradients and tallies their flip events.
pub fn stream_flip_agreement(
    latent: &LatentHyper,
    filtered: &FilterHyper,
    steps: usize,
    weights: usize,
    seed: u64,
) -> Result<FlipAgreement, ExpError> {
    let mut tally = FlipAgreement::default();
    if steps == 0 || weights == 0 {
        return Ok(tally);
    }
    let lat_cfg = LatentConfig::magnitude_independent(
        Schedule::new(latent.epsilon_decay, latent.epsilon, steps),
        latent.lambda,
        latent.gamma,
    );
    let fil_cfg = FilterConfig::new(Schedule::new(filtered.alpha_decay, filtered.alpha, steps), filtered.gamma);
    let mut lat = LatentOptimState::new(vec![0.0; weights], lat_cfg, seed)?;
    let mut fil = FilterOptimState::new(weights, fil_cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ STREAM_SALT);
    let mut grad = vec![0.0; weights];
    for t in 0..steps {
        grad.iter_mut().for_each(|g| *g = StandardNormal.sample(&mut rng));
        let a = lat.step(&grad, t)?;
        let b = fil.step(&grad, t)?;
        tally.add(a.as_slice(), b.as_slice());
    }
    Ok(tally)
}

/// Trains a latent twin and a filtered twin on the same data order and seed
/// and compares their flip events, after a random-stream comparison with the
/// same hyperparameters.
pub fn run_equivalence(cfg: &ExperimentConfig) -> Result<EquivalenceReport, ExpError> {
    let latent = magnitude_independent(&cfg.latent);
    check_matched(&latent, &cfg.filtered)?;
    let spec = &cfg.equivalence;
    let stream =
        stream_flip_agreement(&latent, &cfg.filtered, spec.stream_steps, spec.stream_weights, cfg.seed)?;

    let data = load_dataset(cfg)?;
    let name = cfg.run_name();
    let mut twins = Vec::new();
    for (suffix, binary) in [
        ("latent", BinaryOptimizerConfig::Latent(latent.clone())),
        ("filtered", BinaryOptimizerConfig::Filtered(cfg.filtered.clone())),
    ] {
        let mut tc = train_config(cfg, binary);
        tc.record_flip_events = true;
        twins.push((format!("{name}-{suffix}"), tc));
    }
    let mut runs = run_all(cfg, &data, twins)?;

    let ev_l = runs[0].log.flip_events.take().unwrap_or_default();
    let ev_f = runs[1].log.flip_events.take().unwrap_or_default();
    let mut train = FlipAgreement::default();
    let mut per_step_agreement = Vec::with_capacity(ev_l.len());
    for (a, b) in ev_l.iter().zip(&ev_f) {
        let mut step = FlipAgreement::default();
        step.add(a, b);
        per_step_agreement.push(step.event_agreement());
        train.add(a, b);
    }

    let mut summary = Table::new(&["metric", "value"]);
    summary.push(row!["stream_steps", spec.stream_steps]);
    summary.push(row!["stream_weights", spec.stream_weights]);
    summary.push(row!["stream_flip_events", stream.both + stream.latent_only + stream.filtered_only]);
    summary.push(row!["stream_event_agreement_frac", stream.event_agreement()]);
    summary.push(row!["stream_pair_agreement_frac", stream.pair_agreement()]);
    summary.push(row!["train_steps", runs[0].log.total_steps]);
    summary.push(row!["train_flip_events", train.both + train.latent_only + train.filtered_only]);
    summary.push(row!["train_event_agreement_frac", train.event_agreement()]);
    summary.push(row!["train_pair_agreement_frac", train.pair_agreement()]);
    summary.push(row!["gamma_matched", latent.gamma == cfg.filtered.gamma]);
    summary.push(row!["latent_final_test_accuracy_frac", runs[0].log.final_test_accuracy()]);
    summary.push(row!["filtered_final_test_accuracy_frac", runs[1].log.final_test_accuracy()]);
    let mut curve = Table::new(&["step", "latent_ff_ratio", "filtered_ff_ratio", "event_agreement_frac"]);
    for ((a, b), ag) in runs[0].log.flips.iter().zip(&runs[1].log.flips).zip(&per_step_agreement) {
        curve.push(row![a.step, a.ff_ratio, b.ff_ratio, ag]);
    }
    let out = persist(cfg, &runs, &summary, &[("agreement.csv", &curve)])?;

    let filtered = runs.pop().expect("two runs");
    let latent_run = runs.pop().expect("two runs");
    Ok(EquivalenceReport {
        stream_steps: spec.stream_steps,
        stream_weights: spec.stream_weights,
        stream,
        train,
        per_step_agreement,
        gamma_matched: latent.gamma == cfg.filtered.gamma,
        latent: latent_run,
        filtered,
        out,
    })
}
