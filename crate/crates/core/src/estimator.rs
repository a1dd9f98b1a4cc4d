//! Adaptive estimators for the layer-2 timers and the transmit-buffer size.
//!
//! The transmitter observes the sojourn times of correctly acknowledged SDUs
//! and the receiver observes end-to-end packet delays. Both observation sets
//! reduce to their maximum (the objective being monotone in the sojourn), the
//! maxima convert into effective attempt counts, and the counts produce the
//! discard, reordering and reassembly timers plus the minimal buffer size.

use thiserror::Error;

use crate::link::ProcessingDelays;
use crate::sim::TimeMs;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("observation set is empty")]
    EmptyObservationSet,
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
}

/// Which entity collected the observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationSide {
    Transmitter,
    Receiver,
}

/// A bounded set of positive sojourn/delay stamps, at most `capacity` entries
/// kept in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    side: ObservationSide,
    stamps: Vec<TimeMs>,
    capacity: usize,
}

impl ObservationSet {
    pub fn new(side: ObservationSide, capacity: usize) -> Self {
        ObservationSet {
            side,
            stamps: Vec::with_capacity(capacity.min(1024)),
            capacity,
        }
    }

    pub fn from_stamps(
        side: ObservationSide,
        capacity: usize,
        stamps: impl IntoIterator<Item = TimeMs>,
    ) -> Result<Self, EstimatorError> {
        let mut set = ObservationSet::new(side, capacity);
        for s in stamps {
            set.push(s)?;
        }
        Ok(set)
    }

    /// Append a stamp; silently drops anything past capacity.
    pub fn push(&mut self, stamp: TimeMs) -> Result<(), EstimatorError> {
        if stamp.0 <= 0.0 {
            return Err(EstimatorError::InvalidObservation(format!(
                "non-positive stamp {stamp}"
            )));
        }
        if self.stamps.len() < self.capacity {
            self.stamps.push(stamp);
        }
        Ok(())
    }

    pub fn side(&self) -> ObservationSide {
        self.side
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.stamps.len() >= self.capacity
    }

    pub fn stamps(&self) -> &[TimeMs] {
        &self.stamps
    }
}

/// Keep only samples whose ACK actually arrived (a lost ACK makes the
/// transmitter-side sojourn meaningless for attempt estimation), truncated to
/// the first `capacity` valid samples in arrival order.
pub fn filter_ack_lost(
    raw: &[(TimeMs, bool)],
    capacity: usize,
) -> Result<ObservationSet, EstimatorError> {
    let mut set = ObservationSet::new(ObservationSide::Transmitter, capacity);
    for &(sojourn, ack_lost) in raw {
        if !ack_lost {
            set.push(sojourn)?;
        }
    }
    if set.is_empty() {
        return Err(EstimatorError::EmptyObservationSet);
    }
    Ok(set)
}

/// The observed maximum sojourn. The estimation objective grows monotonically
/// with the sojourn, so the optimum over a finite set is the set maximum.
pub fn solve_max_sojourn(obs: &ObservationSet) -> Result<TimeMs, EstimatorError> {
    obs.stamps()
        .iter()
        .copied()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(EstimatorError::EmptyObservationSet)
}

// Ceiling with a snap-to-integer guard: quotients that are integers up to
// floating-point noise must not round up an extra step.
fn is_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn ceil_robust(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

/// Effective maximum attempt count seen by the transmitter:
/// `ceil((t_star - 4 * t_pro_total) / r_d)`, at least 1.
pub fn estimate_n(t_star: TimeMs, r_d: TimeMs, t_pro_total: TimeMs) -> Result<u32, EstimatorError> {
    if !is_positive(r_d.0) {
        return Err(EstimatorError::InvalidObservation(format!(
            "round-trip delay must be positive, got {r_d}"
        )));
    }
    let numerator = t_star.0 - 4.0 * t_pro_total.0;
    if numerator <= 0.0 {
        return Err(EstimatorError::InvalidObservation(format!(
            "sojourn {t_star} does not exceed 4x processing delay"
        )));
    }
    Ok((ceil_robust(numerator / r_d.0) as u32).max(1))
}

/// Effective maximum attempt count seen by the receiver:
/// `ceil((t_star_rx - 2 * t_pro_total) / (r_d / 2))`, at least 1.
pub fn estimate_m(
    t_star_rx: TimeMs,
    r_d: TimeMs,
    t_pro_total: TimeMs,
) -> Result<u32, EstimatorError> {
    if !is_positive(r_d.0) {
        return Err(EstimatorError::InvalidObservation(format!(
            "round-trip delay must be positive, got {r_d}"
        )));
    }
    let numerator = t_star_rx.0 - 2.0 * t_pro_total.0;
    if numerator <= 0.0 {
        return Err(EstimatorError::InvalidObservation(format!(
            "delay {t_star_rx} does not exceed 2x processing delay"
        )));
    }
    Ok((ceil_robust(numerator / (r_d.0 / 2.0)) as u32).max(1))
}

/// Discard timer for `n` effective attempts: `n * (r_d + 4 * t_pro_total)`.
pub fn optimal_discard_timer(n: u32, r_d: TimeMs, t_pro_total: TimeMs) -> TimeMs {
    debug_assert!(n >= 1);
    TimeMs(n as f64 * (r_d.0 + 4.0 * t_pro_total.0))
}

/// Minimum transmit-buffer size in one-packet cells supporting `r_p` packets
/// per ms with no transmitter-side loss: `ceil(n * (r_d + 4 t_pro) * r_p)`.
pub fn optimal_buffer_size(n: u32, r_d: TimeMs, t_pro_total: TimeMs, r_p: f64) -> u64 {
    debug_assert!(n >= 1 && r_p > 0.0);
    let cells = optimal_discard_timer(n, r_d, t_pro_total).0 * r_p;
    (ceil_robust(cells) as u64).max(1)
}

/// Reordering timer for `m` receiver-side attempts: `m * (r_d/2 + 2 t_pro)`.
pub fn reordering_timer(m: u32, r_d: TimeMs, t_pro_total: TimeMs) -> TimeMs {
    debug_assert!(m >= 1);
    TimeMs(m as f64 * (r_d.0 / 2.0 + 2.0 * t_pro_total.0))
}

/// Reassembly timer: same shape as the reordering timer but the PDCP
/// processing term drops out (the RLC layer sits below it).
pub fn reassembly_timer(m: u32, r_d: TimeMs, t_pro_rlc: TimeMs, t_pro_lower: TimeMs) -> TimeMs {
    debug_assert!(m >= 1);
    TimeMs(m as f64 * (r_d.0 / 2.0 + 2.0 * (t_pro_rlc.0 + t_pro_lower.0)))
}

/// One adaptation outcome: the estimated attempt counts and the timer values
/// computed against a specific link state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimerConfig {
    pub n_hat: u32,
    pub m_hat: u32,
    pub t_d_ms: TimeMs,
    pub t_r_ms: TimeMs,
    pub t_re_ms: TimeMs,
    pub valid_from: TimeMs,
    pub adaptation_period_ms: TimeMs,
}

/// Run the full adaptation step: max-sojourn solve on both sides, attempt
/// estimation, then every timer plus the buffer size. Callers keep their
/// previous configuration when this returns an error.
#[allow(clippy::too_many_arguments)]
pub fn adapt(
    obs_tx: &ObservationSet,
    obs_rx: &ObservationSet,
    r_d: TimeMs,
    processing: &ProcessingDelays,
    r_p: f64,
    now: TimeMs,
    adaptation_period_ms: TimeMs,
) -> Result<(TimerConfig, u64), EstimatorError> {
    let t_star_tx = solve_max_sojourn(obs_tx)?;
    let t_star_rx = solve_max_sojourn(obs_rx)?;
    let total = processing.total();
    let n_hat = estimate_n(t_star_tx, r_d, total)?;
    let m_hat = estimate_m(t_star_rx, r_d, total)?;
    let config = TimerConfig {
        n_hat,
        m_hat,
        t_d_ms: optimal_discard_timer(n_hat, r_d, total),
        t_r_ms: reordering_timer(m_hat, r_d, total),
        t_re_ms: reassembly_timer(
            m_hat,
            r_d,
            TimeMs(processing.rlc_ms),
            TimeMs(processing.lower_ms),
        ),
        valid_from: now,
        adaptation_period_ms,
    };
    let b_star = optimal_buffer_size(n_hat, r_d, total, r_p);
    Ok((config, b_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{ack_delay, ProcessingMode};
    use proptest::prelude::*;

    fn tx_set(stamps: &[f64]) -> ObservationSet {
        ObservationSet::from_stamps(
            ObservationSide::Transmitter,
            stamps.len(),
            stamps.iter().map(|&s| TimeMs(s)),
        )
        .unwrap()
    }

    fn rx_set(stamps: &[f64]) -> ObservationSet {
        ObservationSet::from_stamps(
            ObservationSide::Receiver,
            stamps.len(),
            stamps.iter().map(|&s| TimeMs(s)),
        )
        .unwrap()
    }

    #[test]
    fn filter_drops_ack_lost_samples() {
        let raw = [
            (TimeMs(22.0), false),
            (TimeMs(44.0), true),
            (TimeMs(62.0), false),
        ];
        let set = filter_ack_lost(&raw, 20).unwrap();
        let kept: Vec<f64> = set.stamps().iter().map(|t| t.0).collect();
        assert_eq!(kept, vec![22.0, 62.0]);
    }

    #[test]
    fn filter_all_lost_is_empty_error() {
        let raw = [(TimeMs(22.0), true), (TimeMs(44.0), true)];
        assert_eq!(
            filter_ack_lost(&raw, 20).unwrap_err(),
            EstimatorError::EmptyObservationSet
        );
    }

    #[test]
    fn filter_truncates_to_capacity_in_arrival_order() {
        let raw: Vec<(TimeMs, bool)> =
            (1..=25).map(|i| (TimeMs(i as f64), false)).collect();
        let set = filter_ack_lost(&raw, 20).unwrap();
        assert_eq!(set.len(), 20);
        assert_eq!(set.stamps()[0].0, 1.0);
        assert_eq!(set.stamps()[19].0, 20.0);
    }

    #[test]
    fn max_sojourn_examples() {
        assert_eq!(solve_max_sojourn(&tx_set(&[22.0, 42.0, 62.0])).unwrap().0, 62.0);
        assert_eq!(solve_max_sojourn(&tx_set(&[22.0])).unwrap().0, 22.0);
    }

    #[test]
    fn max_sojourn_matches_brute_force_over_generated_journeys() {
        // 20 stamps from the per-journey model with k in [2, 9]; the winner
        // must be the stamp of the packet with the largest k.
        let rd = TimeMs(20.0);
        let tp = TimeMs(0.5);
        let ks = [3u32, 7, 2, 9, 5, 4, 8, 6, 2, 9, 3, 5, 7, 4, 6, 8, 2, 3, 9, 5];
        let stamps: Vec<TimeMs> = ks
            .iter()
            .map(|&k| ack_delay(k, rd, tp, ProcessingMode::PerJourney))
            .collect();
        let set = ObservationSet::from_stamps(ObservationSide::Transmitter, 20, stamps.clone())
            .unwrap();

        // Independent oracle: scan every stamp.
        let mut best = f64::NEG_INFINITY;
        for s in &stamps {
            if s.0 > best {
                best = s.0;
            }
        }
        let solved = solve_max_sojourn(&set).unwrap().0;
        assert_eq!(solved, best);
        assert_eq!(solved, ack_delay(9, rd, tp, ProcessingMode::PerJourney).0);
    }

    #[test]
    fn estimate_n_examples() {
        let rd = TimeMs(20.0);
        let tp = TimeMs(0.5);
        assert_eq!(estimate_n(TimeMs(22.0), rd, tp).unwrap(), 1);
        assert_eq!(estimate_n(TimeMs(62.0), rd, tp).unwrap(), 3);
        // Partial cycles round up.
        assert_eq!(estimate_n(TimeMs(63.0), rd, tp).unwrap(), 4);
    }

    #[test]
    fn estimate_n_rejects_degenerate_inputs() {
        let rd = TimeMs(20.0);
        assert!(estimate_n(TimeMs(2.0), rd, TimeMs(0.5)).is_err());
        assert!(estimate_n(TimeMs(1.9), rd, TimeMs(0.5)).is_err());
        assert!(estimate_n(TimeMs(22.0), TimeMs(0.0), TimeMs(0.5)).is_err());
    }

    #[test]
    fn estimate_m_examples() {
        let rd = TimeMs(20.0);
        let tp = TimeMs(0.5);
        assert_eq!(estimate_m(TimeMs(11.0), rd, tp).unwrap(), 1);
        assert_eq!(estimate_m(TimeMs(31.0), rd, tp).unwrap(), 3);
        assert_eq!(
            estimate_m(TimeMs(1.0), rd, tp).unwrap_err(),
            EstimatorError::InvalidObservation(
                "delay 1 ms does not exceed 2x processing delay".into()
            )
        );
    }

    #[test]
    fn discard_timer_examples() {
        assert_eq!(optimal_discard_timer(1, TimeMs(20.0), TimeMs(0.5)).0, 22.0);
        assert_eq!(optimal_discard_timer(32, TimeMs(20.0), TimeMs(0.5)).0, 704.0);
        assert_eq!(optimal_discard_timer(3, TimeMs(0.0), TimeMs(0.5)).0, 6.0);
    }

    #[test]
    fn buffer_size_examples() {
        assert_eq!(optimal_buffer_size(1, TimeMs(20.0), TimeMs(0.5), 10.0), 220);
        assert_eq!(optimal_buffer_size(32, TimeMs(20.0), TimeMs(0.5), 10.0), 7040);
        // Vanishing rate still needs one cell.
        assert_eq!(optimal_buffer_size(1, TimeMs(20.0), TimeMs(0.5), 1e-9), 1);
    }

    #[test]
    fn reordering_timer_examples() {
        assert_eq!(reordering_timer(2, TimeMs(20.0), TimeMs(0.5)).0, 22.0);
        assert_eq!(reordering_timer(1, TimeMs(20.0), TimeMs(0.0)).0, 10.0);
        assert_eq!(reordering_timer(9, TimeMs(20.0), TimeMs(0.5)).0, 99.0);
    }

    #[test]
    fn reassembly_timer_examples() {
        let t = reassembly_timer(2, TimeMs(20.0), TimeMs(0.2), TimeMs(0.1));
        assert!((t.0 - 21.2).abs() < 1e-9, "got {t}");
        assert_eq!(reassembly_timer(1, TimeMs(20.0), TimeMs(0.0), TimeMs(0.0)).0, 10.0);
        // Dropping the PDCP term can only shorten the wait.
        for m in 1..=8 {
            let re = reassembly_timer(m, TimeMs(20.0), TimeMs(0.2), TimeMs(0.1));
            let ro = reordering_timer(m, TimeMs(20.0), TimeMs(0.5));
            assert!(re.0 <= ro.0);
        }
    }

    fn delays() -> ProcessingDelays {
        ProcessingDelays {
            pdcp_ms: 0.2,
            rlc_ms: 0.2,
            lower_ms: 0.1,
        }
    }

    #[test]
    fn adapt_composes_the_estimators() {
        let (cfg, b_star) = adapt(
            &tx_set(&[22.0, 42.0, 62.0]),
            &rx_set(&[11.0, 21.0, 31.0]),
            TimeMs(20.0),
            &delays(),
            10.0,
            TimeMs(100.0),
            TimeMs(10_000.0),
        )
        .unwrap();
        assert_eq!(cfg.n_hat, 3);
        assert_eq!(cfg.m_hat, 3);
        assert_eq!(cfg.t_d_ms.0, 66.0);
        assert_eq!(cfg.t_r_ms.0, 33.0);
        assert!((cfg.t_re_ms.0 - 31.8).abs() < 1e-9);
        assert_eq!(cfg.valid_from.0, 100.0);
        assert_eq!(b_star, 660);
    }

    #[test]
    fn adapt_single_sample_sets() {
        let (cfg, b_star) = adapt(
            &tx_set(&[22.0]),
            &rx_set(&[11.0]),
            TimeMs(20.0),
            &delays(),
            10.0,
            TimeMs::ZERO,
            TimeMs(10_000.0),
        )
        .unwrap();
        assert_eq!((cfg.n_hat, cfg.m_hat), (1, 1));
        assert_eq!(cfg.t_d_ms.0, 22.0);
        assert_eq!(cfg.t_r_ms.0, 11.0);
        assert_eq!(b_star, 220);
    }

    #[test]
    fn adapt_empty_set_keeps_previous_config() {
        let empty = ObservationSet::new(ObservationSide::Transmitter, 20);
        let err = adapt(
            &empty,
            &rx_set(&[11.0]),
            TimeMs(20.0),
            &delays(),
            10.0,
            TimeMs::ZERO,
            TimeMs(10_000.0),
        )
        .unwrap_err();
        assert_eq!(err, EstimatorError::EmptyObservationSet);
    }

    #[test]
    fn tightness_versus_worst_case_baseline() {
        let rd = TimeMs(20.0);
        let tp = TimeMs(0.5);
        let worst = optimal_discard_timer(32, rd, tp).0;
        for n in 1..=32 {
            let t = optimal_discard_timer(n, rd, tp).0;
            assert!(t <= worst);
            if n == 32 {
                assert_eq!(t, worst);
            } else {
                assert!(t < worst);
            }
        }
    }

    proptest! {
        // Per-journey sojourns invert exactly for any k, r_d, t_pro with
        // 4 * t_pro < r_d.
        #[test]
        fn estimator_exactness(
            k in 1u32..=40,
            r_d in 10.0f64..=60.0,
            t_pro in 0.0f64..=2.0,
        ) {
            prop_assume!(4.0 * t_pro < r_d);
            let sojourn = TimeMs(k as f64 * r_d + 4.0 * t_pro);
            prop_assert_eq!(estimate_n(sojourn, TimeMs(r_d), TimeMs(t_pro)).unwrap(), k);
            let delay = TimeMs(k as f64 * r_d / 2.0 + 2.0 * t_pro);
            prop_assert_eq!(estimate_m(delay, TimeMs(r_d), TimeMs(t_pro)).unwrap(), k);
        }

        // The tuned discard timer never truncates an observed legitimate
        // sojourn.
        #[test]
        fn conservativeness(
            k in 1u32..=40,
            r_d in 10.0f64..=60.0,
            t_pro in 0.0f64..=2.0,
        ) {
            prop_assume!(4.0 * t_pro < r_d);
            let sojourn = TimeMs(k as f64 * r_d + 4.0 * t_pro);
            let n = estimate_n(sojourn, TimeMs(r_d), TimeMs(t_pro)).unwrap();
            let t_d = optimal_discard_timer(n, TimeMs(r_d), TimeMs(t_pro));
            prop_assert!(t_d.0 >= sojourn.0 - 1e-9);
        }

        // Every output is nondecreasing in the attempt count, the RTD and the
        // processing delays.
        #[test]
        fn monotonicity(
            n in 1u32..=39,
            r_d in 10.0f64..=59.0,
            t_pro in 0.0f64..=1.9,
            r_p in 0.5f64..=20.0,
        ) {
            let rd = TimeMs(r_d);
            let rd2 = TimeMs(r_d + 1.0);
            let tp = TimeMs(t_pro);
            let tp2 = TimeMs(t_pro + 0.1);

            prop_assert!(optimal_discard_timer(n, rd, tp).0 <= optimal_discard_timer(n + 1, rd, tp).0);
            prop_assert!(optimal_discard_timer(n, rd, tp).0 <= optimal_discard_timer(n, rd2, tp).0);
            prop_assert!(optimal_discard_timer(n, rd, tp).0 <= optimal_discard_timer(n, rd, tp2).0);

            prop_assert!(reordering_timer(n, rd, tp).0 <= reordering_timer(n + 1, rd, tp).0);
            prop_assert!(reordering_timer(n, rd, tp).0 <= reordering_timer(n, rd2, tp).0);
            prop_assert!(reordering_timer(n, rd, tp).0 <= reordering_timer(n, rd, tp2).0);

            prop_assert!(reassembly_timer(n, rd, tp, tp).0 <= reassembly_timer(n + 1, rd, tp, tp).0);
            prop_assert!(reassembly_timer(n, rd, tp, tp).0 <= reassembly_timer(n, rd2, tp, tp).0);
            prop_assert!(reassembly_timer(n, rd, tp, tp).0 <= reassembly_timer(n, rd, tp2, tp2).0);

            prop_assert!(optimal_buffer_size(n, rd, tp, r_p) <= optimal_buffer_size(n + 1, rd, tp, r_p));
            prop_assert!(optimal_buffer_size(n, rd, tp, r_p) <= optimal_buffer_size(n, rd2, tp, r_p));
            prop_assert!(optimal_buffer_size(n, rd, tp, r_p) <= optimal_buffer_size(n, rd, tp2, r_p));
        }
    }
}
