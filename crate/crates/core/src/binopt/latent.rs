use super::{check_discount, check_len, stochastic_sign, BinaryOptimizer, FlipMask, OptimError, Schedule, TieBreakRng};

/// Hyperparameters of latent-weight SGD.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentConfig {
    /// Learning rate, possibly decayed.
    pub epsilon: Schedule,
    /// Weight decay factor.
    pub lambda: f64,
    /// Momentum discount; `m = (1 - gamma) m + gamma * grad`.
    pub gamma: f64,
    /// Clamp latent weights to `[-1, 1]` after every update.
    pub clip: bool,
    /// Scale each output channel's gradient by the channel's mean absolute
    /// latent weight (the derivative of `scale * sign(w)` under the STE).
    pub scale: bool,
    /// Number of output channels; weights are laid out channel-major.
    pub channels: usize,
}

impl LatentConfig {
    /// Clipping and scaling off: only the signs of the latent weights matter.
    pub fn magnitude_independent(epsilon: Schedule, lambda: f64, gamma: f64) -> Self {
        Self {
            epsilon,
            lambda,
            gamma,
            clip: false,
            scale: false,
            channels: 1,
        }
    }
}

/// Latent weights `w`, momentum `m` and binary weights `theta = sign(w)`.
#[derive(Debug, Clone)]
pub struct LatentOptimState {
    w: Vec<f64>,
    m: Vec<f64>,
    theta: Vec<i8>,
    config: LatentConfig,
    rng: TieBreakRng,
    channel_scale: Vec<f64>,
}

impl LatentOptimState {
    /// Starts from latent weights `w0` with zero momentum. The initial binary
    /// weights are `sign(w0)`, consuming one tie-break draw per weight.
    pub fn new(w0: Vec<f64>, config: LatentConfig, seed: u64) -> Result<Self, OptimError> {
        check_discount("gamma", config.gamma)?;
        if !(config.lambda >= 0.0) || !config.lambda.is_finite() {
            return Err(OptimError::InvalidHyperparameter(format!(
                "lambda = {} must be finite and non-negative",
                config.lambda
            )));
        }
        if config.channels == 0 || !w0.len().is_multiple_of(config.channels) {
            return Err(OptimError::InvalidHyperparameter(format!(
                "{} weights cannot be split into {} channels",
                w0.len(),
                config.channels
            )));
        }
        let mut rng = TieBreakRng::new(seed);
        let mut w0 = w0;
        if config.clip {
            w0.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
        }
        let theta = w0.iter().map(|&v| stochastic_sign(v, &mut rng)).collect();
        Ok(Self {
            m: vec![0.0; w0.len()],
            channel_scale: vec![1.0; config.channels],
            w: w0,
            theta,
            config,
            rng,
        })
    }

    pub fn latent(&self) -> &[f64] {
        &self.w
    }

    pub fn momentum(&self) -> &[f64] {
        &self.m
    }

    pub fn config(&self) -> &LatentConfig {
        &self.config
    }

    /// Mean absolute latent weight per channel, as used by the last scaled step.
    pub fn channel_scale(&self) -> &[f64] {
        &self.channel_scale
    }

    /// One SGD step: `m <- (1-gamma) m + gamma grad`, `w <- w - eps (m + lambda w)`,
    /// optional clamp, then `theta <- sign(w)`.
    pub fn latent_step(&mut self, grad: &[f64], t: usize) -> Result<FlipMask, OptimError> {
        let n = self.w.len();
        check_len(n, grad.len())?;
        let eps = self.config.epsilon.value(t)?;
        let (gamma, lambda) = (self.config.gamma, self.config.lambda);
        let per_channel = n / self.config.channels;

        if self.config.scale {
            for (c, s) in self.channel_scale.iter_mut().enumerate() {
                let row = &self.w[c * per_channel..(c + 1) * per_channel];
                *s = row.iter().map(|v| v.abs()).sum::<f64>() / per_channel.max(1) as f64;
            }
        }

        let mut flipped = vec![false; n];
        for k in 0..n {
            let g = if self.config.scale {
                grad[k] * self.channel_scale[k / per_channel]
            } else {
                grad[k]
            };
            self.m[k] = (1.0 - gamma) * self.m[k] + gamma * g;
            let mut w = self.w[k] - eps * (self.m[k] + lambda * self.w[k]);
            if self.config.clip {
                w = w.clamp(-1.0, 1.0);
            }
            self.w[k] = w;
            let s = stochastic_sign(w, &mut self.rng);
            flipped[k] = s != self.theta[k];
            self.theta[k] = s;
        }
        Ok(FlipMask(flipped))
    }
}

impl BinaryOptimizer for LatentOptimState {
    fn theta(&self) -> &[i8] {
        &self.theta
    }

    fn step(&mut self, grad: &[f64], t: usize) -> Result<FlipMask, OptimError> {
        self.latent_step(grad, t)
    }

    fn accumulator(&self, k: usize) -> f64 {
        -self.w[k]
    }
}
