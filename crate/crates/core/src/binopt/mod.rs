//! Optimizers for binary (±1) weights.
//!
//! Two views of the same update are provided:
//!
//! * [`LatentOptimState`]: classical SGD with momentum and weight decay on
//!   real-valued latent weights, binarized with a sign function. Clipping and
//!   channel-wise scaling can be switched on to get the magnitude-dependent
//!   baseline.
//! * [`FilterOptimState`]: no latent weights. The gradient is smoothed by a
//!   momentum EMA and then by a second EMA with discount `alpha`, and the
//!   binary weight is the negated sign of the result. With zero initialization
//!   and `alpha = epsilon * lambda` this flips exactly the same bits as the
//!   latent view.
//!
//! Both views break ties at zero with [`stochastic_sign`] and consume one
//! tie-break draw per weight per step, in index order.

mod filter;
mod latent;
mod oracle;
mod schedule;
mod sign;

pub use filter::{FilterConfig, FilterForm, FilterOptimState};
pub use latent::{LatentConfig, LatentOptimState};
pub use oracle::{scale_equivalence_check, unrolled_oracle};
pub use schedule::{Schedule, ScheduleKind, VALUE_FLOOR};
pub use sign::{stochastic_sign, TieBreakRng};

use thiserror::Error;

use crate::iir::IirError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("schedule queried at step {step} beyond its length {total}")]
    ScheduleOutOfRange { step: usize, total: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error(transparent)]
    Filter(#[from] IirError),
}

/// Which weights changed sign during one update.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlipMask(Vec<bool>);

impl FlipMask {
    pub fn from_signs(prev: &[i8], next: &[i8]) -> Self {
        FlipMask(prev.iter().zip(next).map(|(a, b)| a != b).collect())
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Common surface of the binary-weight optimizers.
pub trait BinaryOptimizer: Send {
    /// Current binary weights, each exactly `-1` or `+1`.
    fn theta(&self) -> &[i8];

    /// Applies the gradient with respect to the binary weights for step `t`.
    fn step(&mut self, grad: &[f64], t: usize) -> Result<FlipMask, OptimError>;

    /// Accumulated negative gradient of weight `k` (`-w` for the latent view).
    fn accumulator(&self, k: usize) -> f64;

    fn len(&self) -> usize {
        self.theta().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<(), OptimError> {
    if expected == got {
        Ok(())
    } else {
        Err(OptimError::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_discount(name: &str, v: f64) -> Result<(), OptimError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(OptimError::InvalidHyperparameter(format!("{name} = {v} must lie in (0, 1]")))
    }
}
