use std::fmt;
use std::str::FromStr;

use super::{check_discount, check_len, stochastic_sign, BinaryOptimizer, FlipMask, OptimError, Schedule, TieBreakRng};
use crate::iir::{make_second_order_bnn, LinearFilter};

/// How the double EMA is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterForm {
    /// Momentum EMA followed by the `alpha` EMA, two first-order recursions.
    Cascade,
    /// One second-order difference equation over the gradient.
    Direct2,
}

impl fmt::Display for FilterForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterForm::Cascade => "cascade",
            FilterForm::Direct2 => "direct2",
        })
    }
}

impl FromStr for FilterForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cascade" => Ok(FilterForm::Cascade),
            "direct2" => Ok(FilterForm::Direct2),
            other => Err(format!("unknown filter form `{other}` (expected cascade or direct2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Outer EMA discount, possibly decayed.
    pub alpha: Schedule,
    /// Momentum discount.
    pub gamma: f64,
    pub form: FilterForm,
}

impl FilterConfig {
    pub fn new(alpha: Schedule, gamma: f64) -> Self {
        Self {
            alpha,
            gamma,
            form: FilterForm::Cascade,
        }
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Cascade { m: Vec<f64> },
    Direct2 { filter: LinearFilter, alpha: f64 },
}

/// Gradient-filtering optimizer: binary weights are `-sign(g)` where `g` is
/// the twice-smoothed gradient. All accumulators start at zero.
#[derive(Debug, Clone)]
pub struct FilterOptimState {
    g: Vec<f64>,
    theta: Vec<i8>,
    config: FilterConfig,
    engine: Engine,
    rng: TieBreakRng,
}

impl FilterOptimState {
    pub fn new(n: usize, config: FilterConfig, seed: u64) -> Result<Self, OptimError> {
        check_discount("gamma", config.gamma)?;
        check_discount("alpha", config.alpha.initial_value)?;
        let alpha0 = config.alpha.value(0)?;
        let engine = match config.form {
            FilterForm::Cascade => Engine::Cascade { m: vec![0.0; n] },
            FilterForm::Direct2 => Engine::Direct2 {
                filter: LinearFilter::new(make_second_order_bnn(alpha0, config.gamma)?, n),
                alpha: alpha0,
            },
        };
        let mut rng = TieBreakRng::new(seed);
        let theta = (0..n).map(|_| stochastic_sign(-0.0, &mut rng)).collect();
        Ok(Self {
            g: vec![0.0; n],
            theta,
            config,
            engine,
            rng,
        })
    }

    /// Filtered (accumulated negative) gradient.
    pub fn filtered(&self) -> &[f64] {
        &self.g
    }

    /// Momentum accumulator; only the cascade form keeps it explicitly.
    pub fn momentum(&self) -> Option<&[f64]> {
        match &self.engine {
            Engine::Cascade { m } => Some(m),
            Engine::Direct2 { .. } => None,
        }
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    /// One filter step. The scheduled `alpha` is read once and used for every
    /// weight. `theta` is the sign of `-g`, with zero resolved by the tie-break.
    pub fn filter_step(&mut self, grad: &[f64], t: usize) -> Result<FlipMask, OptimError> {
        let n = self.g.len();
        check_len(n, grad.len())?;
        let alpha = self.config.alpha.value(t)?;
        let gamma = self.config.gamma;
        match &mut self.engine {
            Engine::Cascade { m } => {
                for k in 0..n {
                    m[k] = (1.0 - gamma) * m[k] + gamma * grad[k];
                    self.g[k] = (1.0 - alpha) * self.g[k] + alpha * m[k];
                }
            }
            Engine::Direct2 { filter, alpha: current } => {
                if *current != alpha {
                    filter.set_coeffs(make_second_order_bnn(alpha, gamma)?)?;
                    *current = alpha;
                }
                filter.step_into(grad, &mut self.g)?;
            }
        }
        let mut flipped = vec![false; n];
        for k in 0..n {
            let s = stochastic_sign(-self.g[k], &mut self.rng);
            flipped[k] = s != self.theta[k];
            self.theta[k] = s;
        }
        Ok(FlipMask(flipped))
    }
}

impl BinaryOptimizer for FilterOptimState {
    fn theta(&self) -> &[i8] {
        &self.theta
    }

    fn step(&mut self, grad: &[f64], t: usize) -> Result<FlipMask, OptimError> {
        self.filter_step(grad, t)
    }

    fn accumulator(&self, k: usize) -> f64 {
        self.g[k]
    }
}
