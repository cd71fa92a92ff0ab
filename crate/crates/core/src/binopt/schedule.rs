use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::OptimError;

/// Smallest value a schedule produces. An EMA discount of exactly zero would
/// stop all updates; `1e-20` behaves the same for every practical purpose.
pub const VALUE_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Constant,
    Cosine,
    Linear,
}

impl ScheduleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::Cosine => "cosine",
            ScheduleKind::Linear => "linear",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" | "none" => Ok(ScheduleKind::Constant),
            "cosine" => Ok(ScheduleKind::Cosine),
            "linear" => Ok(ScheduleKind::Linear),
            other => Err(format!("unknown schedule `{other}` (expected constant, cosine or linear)")),
        }
    }
}

/// A hyperparameter that varies over `total_steps` optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub initial_value: f64,
    pub total_steps: usize,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, initial_value: f64, total_steps: usize) -> Self {
        Self {
            kind,
            initial_value,
            total_steps,
        }
    }

    /// A constant value valid for any step index.
    pub fn constant(value: f64) -> Self {
        Self::new(ScheduleKind::Constant, value, usize::MAX)
    }

    pub fn cosine(initial_value: f64, total_steps: usize) -> Self {
        Self::new(ScheduleKind::Cosine, initial_value, total_steps)
    }

    pub fn linear(initial_value: f64, total_steps: usize) -> Self {
        Self::new(ScheduleKind::Linear, initial_value, total_steps)
    }

    /// Value at step `t` (`0 <= t <= total_steps`), floored at [`VALUE_FLOOR`].
    pub fn value(&self, t: usize) -> Result<f64, OptimError> {
        if t > self.total_steps {
            return Err(OptimError::ScheduleOutOfRange {
                step: t,
                total: self.total_steps,
            });
        }
        let frac = if self.total_steps == 0 {
            0.0
        } else {
            t as f64 / self.total_steps as f64
        };
        let v = match self.kind {
            ScheduleKind::Constant => self.initial_value,
            ScheduleKind::Cosine => self.initial_value * 0.5 * (1.0 + (PI * frac).cos()),
            ScheduleKind::Linear => self.initial_value * (1.0 - frac),
        };
        Ok(v.max(VALUE_FLOOR))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cosine_endpoints_and_midpoint() {
        let s = Schedule::cosine(1e-3, 1000);
        assert_eq!(s.value(0).unwrap(), 1e-3);
        assert_relative_eq!(s.value(500).unwrap(), 5e-4, max_relative = 1e-12);
        assert_eq!(s.value(1000).unwrap(), VALUE_FLOOR);
    }

    #[test]
    fn linear_hits_floor() {
        let s = Schedule::linear(1e-5, 600_000);
        assert_eq!(s.value(600_000).unwrap(), 1e-20);
        assert_relative_eq!(s.value(300_000).unwrap(), 5e-6, max_relative = 1e-12);
    }

    #[test]
    fn past_the_end_is_an_error() {
        let s = Schedule::cosine(0.1, 10);
        assert!(matches!(
            s.value(11),
            Err(OptimError::ScheduleOutOfRange { step: 11, total: 10 })
        ));
        assert_eq!(Schedule::constant(0.3).value(1 << 40).unwrap(), 0.3);
    }

    #[test]
    fn zero_length_schedule() {
        assert_eq!(Schedule::cosine(0.2, 0).value(0).unwrap(), 0.2);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("cosine".parse::<ScheduleKind>().unwrap(), ScheduleKind::Cosine);
        assert_eq!("none".parse::<ScheduleKind>().unwrap(), ScheduleKind::Constant);
        assert!("exp".parse::<ScheduleKind>().is_err());
    }

    proptest! {
        #[test]
        fn decays_are_monotone_and_bounded(init in 1e-8f64..10.0, total in 1usize..5000, t in 0usize..5000) {
            let t = t.min(total);
            for kind in [ScheduleKind::Cosine, ScheduleKind::Linear] {
                let s = Schedule::new(kind, init, total);
                let v = s.value(t).unwrap();
                prop_assert!(v >= VALUE_FLOOR && v <= init);
                if t < total {
                    prop_assert!(s.value(t + 1).unwrap() <= v);
                }
            }
        }
    }
}
