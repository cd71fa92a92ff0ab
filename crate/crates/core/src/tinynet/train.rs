use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Dataset, Mode, Net, NetError};
use crate::binopt::{
    BinaryOptimizer, FilterConfig, FilterForm, FilterOptimState, LatentConfig, LatentOptimState, OptimError,
    Schedule, ScheduleKind,
};
use crate::bitmetrics::FlipRecord;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

/// The seven latent-view hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentHyper {
    pub epsilon: f64,
    pub epsilon_decay: ScheduleKind,
    /// Latent weights start uniform in `[-w0_scale, w0_scale]`.
    pub w0_scale: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub scaling: bool,
    pub clipping: bool,
}

impl Default for LatentHyper {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            epsilon_decay: ScheduleKind::Cosine,
            w0_scale: 0.0,
            gamma: 0.1,
            lambda: 1e-3,
            scaling: false,
            clipping: false,
        }
    }
}

/// The three filtered-view hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterHyper {
    pub alpha: f64,
    pub alpha_decay: ScheduleKind,
    pub gamma: f64,
}

impl Default for FilterHyper {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            alpha_decay: ScheduleKind::Cosine,
            gamma: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BinaryOptimizerConfig {
    Latent(LatentHyper),
    Filtered(FilterHyper),
}

/// SGD with momentum and weight decay for the real-valued parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RealOptimizerConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub decay: ScheduleKind,
}

impl Default for RealOptimizerConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            momentum: 0.9,
            weight_decay: 1e-4,
            decay: ScheduleKind::Cosine,
        }
    }
}

/// Binary weight whose raw and filtered gradients are recorded every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackedWeight {
    /// Index among the binary layers.
    pub layer: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub binary: BinaryOptimizerConfig,
    pub real: RealOptimizerConfig,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub track: Option<TrackedWeight>,
    /// Keep every step's pooled flip mask (memory grows with steps x weights).
    pub record_flip_events: bool,
}

impl TrainConfig {
    pub fn new(binary: BinaryOptimizerConfig) -> Self {
        Self {
            binary,
            real: RealOptimizerConfig::default(),
            hidden: vec![64, 64, 64],
            epochs: 50,
            batch_size: 64,
            seed: 0,
            track: None,
            record_flip_events: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 0 is the evaluation before any training.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub step: usize,
    pub grad: f64,
    pub filtered: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub steps_per_epoch: usize,
    pub total_steps: usize,
    /// Pooled over all binary layers, one record per update.
    pub flips: Vec<FlipRecord>,
    /// Per step, flips of each binary layer.
    pub layer_flips: Vec<Vec<usize>>,
    pub epochs: Vec<EpochRecord>,
    pub trace: Vec<TracePoint>,
    pub flip_events: Option<Vec<Vec<bool>>>,
}

impl TrainLog {
    pub fn final_epoch(&self) -> &EpochRecord {
        self.epochs.last().expect("log always holds the initial evaluation")
    }

    pub fn final_test_accuracy(&self) -> f64 {
        self.final_epoch().test_accuracy
    }
}

/// Accuracy and mean loss in evaluation mode.
pub fn evaluate(net: &Net, x: &[f64], y: &[usize]) -> Result<(f64, f64), NetError> {
    if y.is_empty() {
        return Ok((0.0, 0.0));
    }
    let dim = net.in_dim();
    let (mut correct, mut loss) = (0usize, 0.0);
    for (xc, yc) in x.chunks(256 * dim).zip(y.chunks(256)) {
        let cache = net.forward(xc, yc.len(), Mode::Eval)?;
        loss += net.loss_and_logit_grad(&cache.logits, yc)?.0 * yc.len() as f64;
        let k = net.n_classes();
        for (row, &label) in cache.logits.chunks(k).zip(yc) {
            let pred = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (c, &v)| if v > b.1 { (c, v) } else { b })
                .0;
            correct += usize::from(pred == label);
        }
    }
    Ok((correct as f64 / y.len() as f64, loss / y.len() as f64))
}

fn layer_seed(seed: u64, layer: usize) -> u64 {
    seed ^ (layer as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const SHUFFLE_STREAM: u64 = 0x5EED_0000_0000_0001;
const INIT_STREAM: u64 = 0x5EED_0000_0000_0002;

fn build_optimizer(
    cfg: &BinaryOptimizerConfig,
    n: usize,
    channels: usize,
    total_steps: usize,
    seed: u64,
    init_rng: &mut ChaCha8Rng,
) -> Result<Box<dyn BinaryOptimizer>, TrainError> {
    Ok(match cfg {
        BinaryOptimizerConfig::Latent(h) => {
            let w0: Vec<f64> = if h.w0_scale > 0.0 {
                (0..n).map(|_| h.w0_scale * init_rng.random_range(-1.0..=1.0)).collect()
            } else {
                vec![0.0; n]
            };
            let c = LatentConfig {
                epsilon: Schedule::new(h.epsilon_decay, h.epsilon, total_steps),
                lambda: h.lambda,
                gamma: h.gamma,
                clip: h.clipping,
                scale: h.scaling,
                channels,
            };
            Box::new(LatentOptimState::new(w0, c, seed)?)
        }
        BinaryOptimizerConfig::Filtered(h) => {
            let c = FilterConfig {
                alpha: Schedule::new(h.alpha_decay, h.alpha, total_steps),
                gamma: h.gamma,
                form: FilterForm::Cascade,
            };
            Box::new(FilterOptimState::new(n, c, seed)?)
        }
    })
}

fn validate(cfg: &TrainConfig, data: &Dataset) -> Result<(), TrainError> {
    if cfg.batch_size == 0 {
        return Err(TrainError::Config("batch size must be positive".into()));
    }
    if data.n_train() == 0 && cfg.epochs > 0 {
        return Err(TrainError::Config("training split is empty".into()));
    }
    if cfg.hidden.contains(&0) {
        return Err(TrainError::Config("hidden widths must be positive".into()));
    }
    let r = &cfg.real;
    if !(r.lr > 0.0) || !(0.0..1.0).contains(&r.momentum) || !(r.weight_decay >= 0.0) {
        return Err(TrainError::Config(format!(
            "real optimizer needs lr > 0, momentum in [0, 1), weight decay >= 0 (got {r:?})"
        )));
    }
    if let BinaryOptimizerConfig::Latent(h) = &cfg.binary {
        if !(h.epsilon > 0.0) || !(h.w0_scale >= 0.0) {
            return Err(TrainError::Config("epsilon must be > 0 and w0 scale >= 0".into()));
        }
    }
    Ok(())
}

/// Minibatch training of a fresh network. The run is a pure function of
/// `(cfg, data)`: network init, tie-breaks, latent init and data order are all
/// derived from `cfg.seed`.
pub fn train(cfg: &TrainConfig, data: &Dataset) -> Result<TrainLog, TrainError> {
    validate(cfg, data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Net::new(data.dim, &cfg.hidden, data.n_classes, &mut rng);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_STREAM);
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ INIT_STREAM);

    let n_train = data.n_train();
    let steps_per_epoch = n_train.div_ceil(cfg.batch_size);
    let total_steps = steps_per_epoch * cfg.epochs;

    let mut optimizers = Vec::new();
    for (k, layer) in net.binary_layers_mut().enumerate() {
        let opt = build_optimizer(&cfg.binary, layer.len(), layer.out_dim, total_steps, layer_seed(cfg.seed, k), &mut init_rng)?;
        layer.set_theta(opt.theta())?;
        optimizers.push(opt);
    }
    if let Some(tw) = cfg.track {
        let ok = optimizers.get(tw.layer).is_some_and(|o| tw.index < o.len());
        if !ok {
            return Err(TrainError::Config(format!(
                "tracked weight {}:{} does not exist",
                tw.layer, tw.index
            )));
        }
    }
    let real_lr = Schedule::new(cfg.real.decay, cfg.real.lr, total_steps);

    let mut log = TrainLog {
        steps_per_epoch,
        total_steps,
        flip_events: cfg.record_flip_events.then(Vec::new),
        ..TrainLog::default()
    };
    let (train_acc, train_loss) = evaluate(&net, &data.train_x, &data.train_y)?;
    let (test_acc, _) = evaluate(&net, &data.test_x, &data.test_y)?;
    log.epochs.push(EpochRecord {
        epoch: 0,
        train_loss,
        train_accuracy: train_acc,
        test_accuracy: test_acc,
    });

    let dim = data.dim;
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut xb = Vec::with_capacity(cfg.batch_size * dim);
    let mut yb = Vec::with_capacity(cfg.batch_size);
    let mut t = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(data.train_row(i));
                yb.push(data.train_y[i]);
            }
            let cache = net.forward(&xb, yb.len(), Mode::Train)?;
            net.backward(&cache, &yb)?;
            net.update_running_stats(&cache);

            let lr = real_lr.value(t)?;
            let (mom, wd) = (cfg.real.momentum, cfg.real.weight_decay);
            for p in net.params_mut() {
                for j in 0..p.value.len() {
                    let g = p.grad[j] + if p.decay { wd * p.value[j] } else { 0.0 };
                    p.velocity[j] = mom * p.velocity[j] + g;
                    p.value[j] -= lr * p.velocity[j];
                }
            }

            let mut parts = Vec::with_capacity(optimizers.len());
            let mut events = Vec::new();
            for (k, (layer, opt)) in net.binary_layers_mut().zip(optimizers.iter_mut()).enumerate() {
                let mask = opt.step(&layer.grad_theta, t)?;
                layer.set_theta(opt.theta())?;
                if let Some(tw) = cfg.track.filter(|tw| tw.layer == k) {
                    log.trace.push(TracePoint {
                        step: t,
                        grad: layer.grad_theta[tw.index],
                        filtered: opt.accumulator(tw.index),
                    });
                }
                parts.push(FlipRecord::new(t, mask.count(), mask.len()));
                if log.flip_events.is_some() {
                    events.extend_from_slice(mask.as_slice());
                }
            }
            log.flips.push(FlipRecord::pooled(t, &parts));
            log.layer_flips.push(parts.iter().map(|p| p.flips).collect());
            if let Some(ev) = log.flip_events.as_mut() {
                ev.push(events);
            }
            t += 1;
        }
        let (train_acc, train_loss) = evaluate(&net, &data.train_x, &data.train_y)?;
        let (test_acc, _) = evaluate(&net, &data.test_x, &data.test_y)?;
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy: train_acc,
            test_accuracy: test_acc,
        });
    }
    Ok(log)
}
