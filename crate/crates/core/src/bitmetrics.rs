//! Flip accounting for binary weights.
//!
//! An update flips weight `k` when its sign changes; the FF ratio is the
//! number of flips divided by the number of binary weights, pooled over all
//! binary layers.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("sign vectors differ in length ({prev} vs {next})")]
    LengthMismatch { prev: usize, next: usize },
    #[error("entry {index} is {value}, expected -1 or +1")]
    NotBinary { index: usize, value: i8 },
    #[error("empty series")]
    EmptySeries,
    #[error("window fraction {0} outside (0, 1]")]
    BadWindow(f64),
}

/// Flips of one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipRecord {
    pub step: usize,
    pub flips: usize,
    pub total_weights: usize,
    pub ff_ratio: f64,
}

impl FlipRecord {
    pub fn new(step: usize, flips: usize, total_weights: usize) -> Self {
        let ff_ratio = if total_weights == 0 {
            0.0
        } else {
            flips as f64 / total_weights as f64
        };
        Self {
            step,
            flips,
            total_weights,
            ff_ratio,
        }
    }

    /// Pools several layers' records of the same step.
    pub fn pooled<'a>(step: usize, parts: impl IntoIterator<Item = &'a FlipRecord>) -> Self {
        let (flips, total) = parts
            .into_iter()
            .fold((0, 0), |(f, n), r| (f + r.flips, n + r.total_weights));
        Self::new(step, flips, total)
    }
}

fn check_binary(v: &[i8]) -> Result<(), MetricsError> {
    match v.iter().position(|&x| x != 1 && x != -1) {
        Some(index) => Err(MetricsError::NotBinary { index, value: v[index] }),
        None => Ok(()),
    }
}

/// Counts `sum |next - prev| / 2` over all weights. The step index of the
/// returned record is 0; use [`ff_ratio_at`] to stamp a step.
pub fn ff_ratio(prev: &[i8], next: &[i8]) -> Result<FlipRecord, MetricsError> {
    ff_ratio_at(0, prev, next)
}

pub fn ff_ratio_at(step: usize, prev: &[i8], next: &[i8]) -> Result<FlipRecord, MetricsError> {
    if prev.len() != next.len() {
        return Err(MetricsError::LengthMismatch {
            prev: prev.len(),
            next: next.len(),
        });
    }
    check_binary(prev)?;
    check_binary(next)?;
    let flips = prev
        .iter()
        .zip(next)
        .map(|(&a, &b)| (i32::from(b) - i32::from(a)).unsigned_abs() as usize / 2)
        .sum();
    Ok(FlipRecord::new(step, flips, prev.len()))
}

/// Mean FF ratio over the last `ceil(window_fraction * len)` records.
pub fn ff_series_summary(records: &[FlipRecord], window_fraction: f64) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(MetricsError::BadWindow(window_fraction));
    }
    let window = ((window_fraction * records.len() as f64).ceil() as usize).clamp(1, records.len());
    let tail = &records[records.len() - window..];
    Ok(tail.iter().map(|r| r.ff_ratio).sum::<f64>() / window as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn direct_examples() {
        let r = ff_ratio(&[-1, 1, 1], &[1, 1, -1]).unwrap();
        assert_eq!(r.flips, 2);
        assert_eq!(r.total_weights, 3);
        assert_eq!(r.ff_ratio, 2.0 / 3.0);
        assert_eq!(ff_ratio(&[1, -1], &[1, -1]).unwrap().ff_ratio, 0.0);
        assert_eq!(ff_ratio(&[1, -1, 1], &[-1, 1, -1]).unwrap().ff_ratio, 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(
            ff_ratio(&[1], &[1, 1]),
            Err(MetricsError::LengthMismatch { prev: 1, next: 2 })
        );
        assert_eq!(
            ff_ratio(&[1, 0], &[1, 1]),
            Err(MetricsError::NotBinary { index: 1, value: 0 })
        );
        assert_eq!(ff_series_summary(&[], 0.5), Err(MetricsError::EmptySeries));
        let one = [FlipRecord::new(0, 1, 2)];
        assert!(ff_series_summary(&one, 0.0).is_err());
        assert!(ff_series_summary(&one, 1.5).is_err());
    }

    #[test]
    fn window_summary() {
        let constant: Vec<_> = (0..7).map(|s| FlipRecord::new(s, 1, 10)).collect();
        for w in [0.01, 0.3, 1.0] {
            assert!((ff_series_summary(&constant, w).unwrap() - 0.1).abs() < 1e-15);
        }
        let series: Vec<_> = [1, 0, 0, 0].iter().enumerate().map(|(s, &f)| FlipRecord::new(s, f, 1)).collect();
        assert_eq!(ff_series_summary(&series, 0.5).unwrap(), 0.0);
        assert_eq!(ff_series_summary(&series, 1.0).unwrap(), 0.25);
    }

    #[test]
    fn pooling_layers() {
        let a = FlipRecord::new(3, 2, 10);
        let b = FlipRecord::new(3, 1, 20);
        let p = FlipRecord::pooled(3, [&a, &b]);
        assert_eq!((p.flips, p.total_weights), (3, 30));
        assert_eq!(p.ff_ratio, 0.1);
    }

    fn signs(len: usize) -> impl Strategy<Value = Vec<i8>> {
        prop::collection::vec(prop_oneof![Just(-1i8), Just(1i8)], len)
    }

    proptest! {
        #[test]
        fn symmetric_and_additive((a, b, c, d) in (1usize..64, 1usize..64).prop_flat_map(|(n, m)| (signs(n), signs(n), signs(m), signs(m)))) {
            let ab = ff_ratio(&a, &b).unwrap();
            prop_assert_eq!(ab, ff_ratio(&b, &a).unwrap());
            prop_assert!(ab.ff_ratio >= 0.0 && ab.ff_ratio <= 1.0);
            let cd = ff_ratio(&c, &d).unwrap();
            let joined = ff_ratio(&[a.clone(), c.clone()].concat(), &[b.clone(), d.clone()].concat()).unwrap();
            prop_assert_eq!(joined.flips, ab.flips + cd.flips);
            prop_assert_eq!(joined.total_weights, ab.total_weights + cd.total_weights);
        }
    }
}
