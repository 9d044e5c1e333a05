// SPDX-License-Identifier: MIT OR Apache-2.0

//! Binary event encodings and recurrence-time extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 0/1 event sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcursionSequence {
    bits: Vec<u8>,
    n_events: usize,
}

impl ExcursionSequence {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::validation(format!(
                "excursion bit at position {i} is {}, expected 0 or 1",
                bits[i]
            )));
        }
        let n_events = bits.iter().filter(|&&b| b == 1).count();
        Ok(Self { bits, n_events })
    }

    pub fn from_bools(flags: impl IntoIterator<Item = bool>) -> Self {
        let bits: Vec<u8> = flags.into_iter().map(u8::from).collect();
        let n_events = bits.iter().filter(|&&b| b == 1).count();
        Self { bits, n_events }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn n_events(&self) -> usize {
        self.n_events
    }

    /// 0-based positions of the 1s, ascending.
    pub fn event_positions(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == 1).then_some(i))
            .collect()
    }
}

/// Waiting times (zero counts) around and between the events of a sequence.
///
/// There are always `M + 1` entries: the zeros before the first event, the
/// zeros between each consecutive pair, and the zeros after the last event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceTimes {
    times: Vec<usize>,
    total_length: usize,
}

impl RecurrenceTimes {
    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn total_length(&self) -> usize {
        self.total_length
    }

    pub fn n_events(&self) -> usize {
        self.times.len() - 1
    }

    /// Waiting times strictly between events, dropping the leading and
    /// trailing boundary gaps.
    pub fn interior(&self) -> &[usize] {
        if self.times.len() <= 2 {
            &[]
        } else {
            &self.times[1..self.times.len() - 1]
        }
    }
}

pub fn recurrence_times(e: &ExcursionSequence) -> RecurrenceTimes {
    let mut times = Vec::with_capacity(e.n_events() + 1);
    let mut run = 0usize;
    for &b in e.bits() {
        if b == 1 {
            times.push(run);
            run = 0;
        } else {
            run += 1;
        }
    }
    times.push(run);
    RecurrenceTimes {
        times,
        total_length: e.len(),
    }
}

/// Reject tail levels outside `0 < alpha < 0.5 < beta < 1`.
pub fn check_tail_levels(alpha: f64, beta: f64) -> Result<()> {
    let ok = alpha > 0.0 && alpha < 0.5 && beta > 0.5 && beta < 1.0 && alpha + (1.0 - beta) < 1.0;
    if ok {
        Ok(())
    } else {
        Err(Error::parameter(format!(
            "tail levels need 0 < alpha < 0.5 < beta < 1, got alpha={alpha}, beta={beta}"
        )))
    }
}

/// Default lower tail probability.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Default upper quantile level.
pub const DEFAULT_BETA: f64 = 0.95;

/// Empirical quantile as the order statistic of rank `ceil(q * N)` (1-based).
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Lower and upper tail thresholds at levels `alpha` and `beta`.
pub fn tail_thresholds(x: &[f64], alpha: f64, beta: f64) -> Result<(f64, f64)> {
    check_tail_levels(alpha, beta)?;
    if x.is_empty() {
        return Err(Error::size("cannot take quantiles of an empty series"));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((empirical_quantile(&sorted, alpha), empirical_quantile(&sorted, beta)))
}

/// Mark `x_t <= lower` or `x_t >= upper` as events.
pub fn encode_with_thresholds(x: &[f64], lower: f64, upper: f64) -> ExcursionSequence {
    ExcursionSequence::from_bools(x.iter().map(|&v| v <= lower || v >= upper))
}

/// Mark both tails of `x` as events using empirical quantile thresholds.
pub fn tail_encode(x: &[f64], alpha: f64, beta: f64) -> Result<ExcursionSequence> {
    let (lo, hi) = tail_thresholds(x, alpha, beta)?;
    Ok(encode_with_thresholds(x, lo, hi))
}

/// Events are membership in a ball, given as 0-based row indices.
pub fn ball_encode(n_points: usize, ball: &[usize]) -> Result<ExcursionSequence> {
    let mut bits = vec![0u8; n_points];
    for &i in ball {
        if i >= n_points {
            return Err(Error::validation(format!(
                "ball member {i} outside 0..{n_points}"
            )));
        }
        bits[i] = 1;
    }
    ExcursionSequence::new(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn seq(bits: &[u8]) -> ExcursionSequence {
        ExcursionSequence::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn thresholds_given_directly() {
        let e = encode_with_thresholds(&[5.0, 0.0, -5.0, 0.0, 1.0], -2.0, 2.0);
        assert_eq!(e.bits(), [1, 0, 1, 0, 0]);
        assert_eq!(e.n_events(), 2);
    }

    #[test]
    fn invalid_levels_rejected() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(tail_encode(&x, 0.6, 0.95), Err(Error::Parameter(_))));
        assert!(matches!(tail_encode(&x, 0.05, 0.4), Err(Error::Parameter(_))));
        assert!(matches!(tail_encode(&x, 0.0, 0.9), Err(Error::Parameter(_))));
    }

    #[test]
    fn normal_tail_fraction() {
        let mut rng = crate::seed::rng(20);
        let x: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let e = tail_encode(&x, 0.05, 0.95).unwrap();
        let frac = e.n_events() as f64 / x.len() as f64;
        assert!((0.08..=0.12).contains(&frac), "{frac}");
    }

    #[test]
    fn order_statistic_counts() {
        // Distinct values: rank ceil(0.05 * 100) = 5 from each end.
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let (lo, hi) = tail_thresholds(&x, 0.05, 0.95).unwrap();
        assert_eq!((lo, hi), (4.0, 94.0));
        assert_eq!(tail_encode(&x, 0.05, 0.95).unwrap().n_events(), 5 + 6);
    }

    #[test]
    fn ball_membership() {
        assert_eq!(ball_encode(4, &[0, 2]).unwrap().bits(), [1, 0, 1, 0]);
        let empty = ball_encode(4, &[]).unwrap();
        assert_eq!(empty.n_events(), 0);
        let full = ball_encode(4, &[0, 1, 2, 3]).unwrap();
        assert_eq!(full.n_events(), 4);
        assert!(matches!(ball_encode(4, &[4]), Err(Error::Validation(_))));
    }

    #[test]
    fn recurrence_examples() {
        assert_eq!(recurrence_times(&seq(&[1, 0, 0, 1, 1])).times(), [0, 2, 0, 0]);
        assert_eq!(recurrence_times(&seq(&[0, 0, 0])).times(), [3]);
        assert_eq!(recurrence_times(&seq(&[1, 1, 1])).times(), [0, 0, 0, 0]);
    }

    #[test]
    fn non_binary_rejected() {
        assert!(ExcursionSequence::new(vec![0, 2]).is_err());
    }

    proptest! {
        #[test]
        fn recurrence_tiles_sequence(bits in proptest::collection::vec(0u8..2, 0..300)) {
            let e = seq(&bits);
            let r = recurrence_times(&e);
            prop_assert_eq!(r.times().len(), e.n_events() + 1);
            prop_assert_eq!(r.times().iter().sum::<usize>() + e.n_events(), e.len());
        }

        #[test]
        fn tail_encode_affine_invariant(
            x in proptest::collection::vec(-100f64..100.0, 5..200),
            scale in 0.01f64..100.0,
            shift in -50f64..50.0,
        ) {
            let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let a = tail_encode(&x, 0.1, 0.9).unwrap();
            let b = tail_encode(&y, 0.1, 0.9).unwrap();
            // Rounding in the affine map can merge near-ties; compare only
            // when the transform kept the ordering strict.
            let mut xs = x.clone();
            xs.sort_by(f64::total_cmp);
            let mut ys = y.clone();
            ys.sort_by(f64::total_cmp);
            let strict = xs.windows(2).all(|w| w[0] < w[1]) && ys.windows(2).all(|w| w[0] < w[1]);
            prop_assume!(strict);
            prop_assert_eq!(a, b);
        }
    }
}
