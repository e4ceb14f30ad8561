//! EWMA smoothing and greedy binary-segmentation changepoint detection on
//! per-minute series, plus event alignment against known timestamps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChangepointError {
    #[error("empty series")]
    EmptySeries,
    #[error("span must be at least 1")]
    ZeroSpan,
    #[error("series of length {n} supports at most {max} breakpoints, requested {requested}")]
    TooManyBreakpoints {
        n: usize,
        max: usize,
        requested: usize,
    },
    #[error("penalty must be non-negative")]
    NegativePenalty,
    #[error("series too short to segment")]
    TooShort,
}

/// Exponentially weighted moving average with `alpha = 2 / (span + 1)`,
/// unadjusted weighting: `s_0 = x_0`, `s_t = alpha * x_t + (1 - alpha) * s_{t-1}`.
pub fn ewma(series: &[f64], span: usize) -> Result<Vec<f64>, ChangepointError> {
    if span == 0 {
        return Err(ChangepointError::ZeroSpan);
    }
    if series.is_empty() {
        return Err(ChangepointError::EmptySeries);
    }
    let alpha = 2.0 / (span as f64 + 1.0);
    let mut out = Vec::with_capacity(series.len());
    let mut s = series[0];
    out.push(s);
    for &x in &series[1..] {
        s = alpha * x + (1.0 - alpha) * s;
        out.push(s);
    }
    Ok(out)
}

/// Quadratic deviation from the segment mean.
pub fn l2_cost(segment: &[f64]) -> f64 {
    if segment.is_empty() {
        return 0.0;
    }
    let mean = segment.iter().sum::<f64>() / segment.len() as f64;
    segment.iter().map(|x| (x - mean) * (x - mean)).sum()
}

/// Stopping rule: a fixed number of breakpoints, or the penalty inequality
/// `C(left) + C(right) + beta < C(segment)` with linear penalty f(m) = m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    FixedBreakpoints(usize),
    Penalty(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    /// Start indices of the right-hand segments, strictly increasing,
    /// each in 1..n-1.
    pub breakpoints: Vec<usize>,
    /// Per-segment l2 costs in segment order.
    pub segment_costs: Vec<f64>,
    /// Sum of segment costs.
    pub total_cost: f64,
    /// Total cost plus `beta * m` in penalty mode; equals `total_cost` in
    /// fixed-K mode.
    pub penalized_cost: f64,
    pub stop_rule: StopRule,
}

struct PrefixSums {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl PrefixSums {
    fn new(series: &[f64]) -> Self {
        let mut s1 = Vec::with_capacity(series.len() + 1);
        let mut s2 = Vec::with_capacity(series.len() + 1);
        s1.push(0.0);
        s2.push(0.0);
        for &x in series {
            s1.push(s1.last().unwrap() + x);
            s2.push(s2.last().unwrap() + x * x);
        }
        Self { s1, s2 }
    }

    /// l2 cost of the half-open range [a, b).
    fn cost(&self, a: usize, b: usize) -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = (b - a) as f64;
        let sum = self.s1[b] - self.s1[a];
        let sq = self.s2[b] - self.s2[a];
        (sq - sum * sum / n).max(0.0)
    }
}

#[derive(Debug, Clone)]
struct Segment {
    start: usize,
    end: usize,
    cost: f64,
    best_tau: Option<usize>,
    best_gain: f64,
}

impl Segment {
    fn new(start: usize, end: usize, sums: &PrefixSums) -> Self {
        let cost = sums.cost(start, end);
        let mut best_tau = None;
        let mut best_gain = f64::NEG_INFINITY;
        // Smallest tau wins ties for determinism.
        for tau in start + 1..end {
            let gain = cost - sums.cost(start, tau) - sums.cost(tau, end);
            if gain > best_gain {
                best_gain = gain;
                best_tau = Some(tau);
            }
        }
        Self {
            start,
            end,
            cost,
            best_tau,
            best_gain,
        }
    }
}

/// Greedy binary segmentation: repeatedly apply the split with the largest
/// cost reduction. Fixed-K mode performs exactly K splits; penalty mode
/// splits while the reduction strictly exceeds beta.
pub fn binseg(series: &[f64], stop: StopRule) -> Result<SegmentationResult, ChangepointError> {
    if series.is_empty() {
        return Err(ChangepointError::EmptySeries);
    }
    let n = series.len();
    match stop {
        StopRule::FixedBreakpoints(k) => {
            if k > n - 1 {
                return Err(ChangepointError::TooManyBreakpoints {
                    n,
                    max: n - 1,
                    requested: k,
                });
            }
            if n < 2 && k > 0 {
                return Err(ChangepointError::TooShort);
            }
        }
        StopRule::Penalty(beta) => {
            if beta < 0.0 {
                return Err(ChangepointError::NegativePenalty);
            }
        }
    }
    let sums = PrefixSums::new(series);
    let mut segments = vec![Segment::new(0, n, &sums)];
    let mut splits = 0usize;
    loop {
        let target = match stop {
            StopRule::FixedBreakpoints(k) => {
                if splits >= k {
                    break;
                }
                // The split with the greatest reduction; earliest segment
                // wins ties.
                segments
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.best_tau.is_some())
                    .max_by(|a, b| {
                        a.1.best_gain
                            .total_cmp(&b.1.best_gain)
                            .then(b.1.start.cmp(&a.1.start))
                    })
                    .map(|(i, _)| i)
            }
            StopRule::Penalty(beta) => segments
                .iter()
                .enumerate()
                .filter(|(_, s)| s.best_tau.is_some() && s.best_gain > beta)
                .max_by(|a, b| {
                    a.1.best_gain
                        .total_cmp(&b.1.best_gain)
                        .then(b.1.start.cmp(&a.1.start))
                })
                .map(|(i, _)| i),
        };
        let Some(idx) = target else { break };
        let seg = segments.remove(idx);
        let tau = seg.best_tau.expect("filtered on splittable");
        segments.push(Segment::new(seg.start, tau, &sums));
        segments.push(Segment::new(tau, seg.end, &sums));
        splits += 1;
    }
    segments.sort_by_key(|s| s.start);
    let breakpoints: Vec<usize> = segments.iter().skip(1).map(|s| s.start).collect();
    let segment_costs: Vec<f64> = segments.iter().map(|s| s.cost).collect();
    let total_cost: f64 = segment_costs.iter().sum();
    let penalized_cost = match stop {
        StopRule::FixedBreakpoints(_) => total_cost,
        StopRule::Penalty(beta) => total_cost + beta * breakpoints.len() as f64,
    };
    Ok(SegmentationResult {
        breakpoints,
        segment_costs,
        total_cost,
        penalized_cost,
        stop_rule: stop,
    })
}

/// Signed minutes from the event to the nearest breakpoint:
/// `(breakpoint minute) - (event minute)`. Ties go to the earlier
/// breakpoint. `None` when there are no breakpoints.
pub fn event_alignment(
    result: &SegmentationResult,
    event_minute: i64,
    t0_minute: i64,
) -> Option<i64> {
    result
        .breakpoints
        .iter()
        .map(|&bp| t0_minute + bp as i64 - event_minute)
        .min_by_key(|&offset| (offset.abs(), offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ewma_span_five_alpha() {
        let out = ewma(&[0.0, 10.0], 5).unwrap();
        assert!((out[0] - 0.0).abs() < 1e-12);
        assert!((out[1] - 10.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn ewma_constant_unchanged() {
        let out = ewma(&[4.0; 6], 5).unwrap();
        assert!(out.iter().all(|&v| (v - 4.0).abs() < 1e-12));
        assert!(matches!(ewma(&[], 5), Err(ChangepointError::EmptySeries)));
        assert!(matches!(ewma(&[1.0], 0), Err(ChangepointError::ZeroSpan)));
    }

    #[test]
    fn l2_cost_examples() {
        assert_eq!(l2_cost(&[3.0, 3.0, 3.0]), 0.0);
        assert!((l2_cost(&[0.0, 10.0]) - 50.0).abs() < 1e-12);
        assert!((l2_cost(&[1.0, 2.0, 3.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_no_penalty_breakpoints() {
        let series = vec![2.0; 40];
        let result = binseg(&series, StopRule::Penalty(0.5)).unwrap();
        assert!(result.breakpoints.is_empty());
        assert_eq!(result.total_cost, 0.0);
    }

    #[test]
    fn single_step_found_exactly() {
        let mut series = vec![0.0; 50];
        series.extend(vec![10.0; 50]);
        let result = binseg(&series, StopRule::FixedBreakpoints(1)).unwrap();
        assert_eq!(result.breakpoints, vec![50]);
        assert!(result.total_cost < 1e-9);
        // Unsplit cost is 100 * 25.
        let full = l2_cost(&series);
        assert!((full - 2500.0).abs() < 1e-9);
    }

    #[test]
    fn penalty_inequality_gates_splits() {
        let mut series = vec![0.0; 10];
        series.extend(vec![1.0; 10]);
        // Splitting at 10 reduces cost by 5 (from 5 to 0).
        let gained = binseg(&series, StopRule::Penalty(4.9)).unwrap();
        assert_eq!(gained.breakpoints, vec![10]);
        assert!((gained.penalized_cost - 4.9).abs() < 1e-9);
        let blocked = binseg(&series, StopRule::Penalty(5.1)).unwrap();
        assert!(blocked.breakpoints.is_empty());
    }

    #[test]
    fn mean_shift_recovery_within_two() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let shifts = [30usize, 60, 90];
            let means = [0.0, 5.0, 0.0, 5.0];
            let mut series = Vec::new();
            for i in 0..120 {
                let seg = shifts.iter().filter(|&&s| i >= s).count();
                let noise: f64 = rng.gen::<f64>() - 0.5;
                series.push(means[seg] + noise);
            }
            let result = binseg(&series, StopRule::FixedBreakpoints(3)).unwrap();
            for true_shift in shifts {
                let nearest = result
                    .breakpoints
                    .iter()
                    .map(|&b| (b as i64 - true_shift as i64).abs())
                    .min()
                    .unwrap();
                assert!(nearest <= 2, "breakpoints {:?}", result.breakpoints);
            }
        }
    }

    #[test]
    fn too_many_breakpoints_is_an_error() {
        assert!(matches!(
            binseg(&[1.0, 2.0], StopRule::FixedBreakpoints(2)),
            Err(ChangepointError::TooManyBreakpoints { .. })
        ));
        assert!(binseg(&[1.0, 2.0], StopRule::FixedBreakpoints(1)).is_ok());
    }

    #[test]
    fn translation_leaves_breakpoints_unchanged() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let series: Vec<f64> = (0..80)
            .map(|i| if i < 40 { 1.0 } else { 4.0 } + rng.gen::<f64>())
            .collect();
        let shifted: Vec<f64> = series.iter().map(|x| x + 123.0).collect();
        let a = binseg(&series, StopRule::FixedBreakpoints(2)).unwrap();
        let b = binseg(&shifted, StopRule::FixedBreakpoints(2)).unwrap();
        assert_eq!(a.breakpoints, b.breakpoints);
    }

    #[test]
    fn scaling_scales_costs_quadratically() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let series: Vec<f64> = (0..60)
            .map(|i| if i < 30 { 0.0 } else { 3.0 } + rng.gen::<f64>())
            .collect();
        let scaled: Vec<f64> = series.iter().map(|x| 2.5 * x).collect();
        let a = binseg(&series, StopRule::FixedBreakpoints(2)).unwrap();
        let b = binseg(&scaled, StopRule::FixedBreakpoints(2)).unwrap();
        assert_eq!(a.breakpoints, b.breakpoints);
        for (ca, cb) in a.segment_costs.iter().zip(&b.segment_costs) {
            assert!((cb - 6.25 * ca).abs() < 1e-6 * (1.0 + cb.abs()));
        }
    }

    #[test]
    fn event_alignment_examples() {
        let result = SegmentationResult {
            breakpoints: vec![26],
            segment_costs: vec![0.0, 0.0],
            total_cost: 0.0,
            penalized_cost: 0.0,
            stop_rule: StopRule::FixedBreakpoints(1),
        };
        assert_eq!(event_alignment(&result, 26, 0), Some(0));

        let result2 = SegmentationResult {
            breakpoints: vec![10, 40],
            ..result.clone()
        };
        assert_eq!(event_alignment(&result2, 12, 0), Some(-2));

        let none = SegmentationResult {
            breakpoints: vec![],
            ..result
        };
        assert_eq!(event_alignment(&none, 12, 0), None);
    }

    #[test]
    fn synthetic_step_after_event() {
        // Step injected five minutes after the marked event.
        let mut series = vec![1.0; 30];
        series.extend(vec![8.0; 30]);
        let t0 = 1000;
        let event_minute = t0 + 25;
        let result = binseg(&series, StopRule::FixedBreakpoints(1)).unwrap();
        assert_eq!(event_alignment(&result, event_minute, t0), Some(5));
    }
}
