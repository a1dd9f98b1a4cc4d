//! Scenario execution: wires the engine, channel model, PDCP and RLC entities
//! and the adaptive estimation loop into one deterministic run, and fans a
//! sweep out over its points.
//!
//! Estimation follows an observe-then-tune cycle. While an observation
//! window is open the timers hold their large observation values; once both
//! observation sets are full the estimators run against the current RTD, the
//! tuned values take over and the window closes until the next adaptation
//! tick reopens it. A change of RTD regime invalidates an open window, and
//! samples from packets submitted before the window opened never enter it.

use rayon::prelude::*;

use crate::estimator::{
    adapt, filter_ack_lost, optimal_buffer_size, optimal_discard_timer, reassembly_timer,
    reordering_timer, ObservationSet, ObservationSide,
};
use crate::event::{EventKind, Sn};
use crate::link::RtdSchedule;
use crate::loss::{ack_delay, delivery_delay, AckLossModel, RetransmissionModel};
use crate::metrics::{additional_delay_sample, AdaptationRecord, RunMetrics};
use crate::pdcp::{
    AckOutcome, ExpiryOutcome, FlightInfo, Receiver, RxOutcome, SubmitOutcome, Transmitter,
};
use crate::rlc::{AmReceiver, AmRxOutcome};
use crate::scenario::{
    BufferPolicy, ScenarioConfig, ScenarioError, SweepField, TimerPolicy, WORST_CASE_ATTEMPTS,
};
use crate::sim::{Engine, RandomSource, TimeMs};

#[derive(Debug, Clone, Copy)]
struct TimerValues {
    t_d: TimeMs,
    t_r: TimeMs,
    t_re: TimeMs,
}

struct ObservationWindow {
    /// SN of the first SDU submitted after the window opened; the window
    /// covers SNs `[first_sn, first_sn + capacity)`.
    first_sn: Option<Sn>,
    enrolled: usize,
    /// Enrolled SDUs whose ACK the channel already decided to lose; their
    /// sojourn can never become a valid sample.
    enrolled_lost: usize,
    tx_raw: Vec<(TimeMs, bool)>,
    tx_valid: usize,
    rx_stamps: Vec<TimeMs>,
}

impl ObservationWindow {
    fn covers(&self, sn: Sn, capacity: usize) -> bool {
        match self.first_sn {
            Some(first) => sn >= first && sn < first + capacity as u64,
            None => false,
        }
    }
}

/// Collects one observation window at a time; dormant between adaptations.
///
/// A window covers the first `capacity` SDUs submitted after it opens (the
/// "first O packets" of an assessment period) and is ready once each of them
/// has either produced a transmitter-side sojourn sample or is known to have
/// lost its ACK, and all of their receiver-side delays are in.
struct EstimationController {
    enabled: bool,
    capacity: usize,
    window: Option<ObservationWindow>,
}

impl EstimationController {
    fn new(enabled: bool, capacity: usize) -> Self {
        EstimationController {
            enabled,
            capacity,
            window: None,
        }
    }

    fn open(&mut self) {
        if self.enabled {
            self.window = Some(ObservationWindow {
                first_sn: None,
                enrolled: 0,
                enrolled_lost: 0,
                tx_raw: Vec::new(),
                tx_valid: 0,
                rx_stamps: Vec::new(),
            });
        }
    }

    fn is_open(&self) -> bool {
        self.window.is_some()
    }

    /// Stamps gathered under the previous RTD regime would corrupt the
    /// estimate; drop them and enroll afresh.
    fn restart(&mut self) {
        if self.window.is_some() {
            self.open();
        }
    }

    /// Called for every accepted submission; enrolls the SDU if the window
    /// still has room. `ack_lost` is the channel's draw for the first cycle.
    fn on_submit(&mut self, sn: Sn, ack_lost: bool) {
        let capacity = self.capacity;
        if let Some(w) = &mut self.window {
            if w.enrolled < capacity {
                w.first_sn.get_or_insert(sn);
                debug_assert!(w.covers(sn, capacity));
                w.enrolled += 1;
                if ack_lost {
                    w.enrolled_lost += 1;
                }
            }
        }
    }

    fn record_tx(&mut self, sn: Sn, sojourn: TimeMs, ack_lost: bool) {
        let capacity = self.capacity;
        if let Some(w) = &mut self.window {
            if w.covers(sn, capacity) {
                w.tx_raw.push((sojourn, ack_lost));
                if !ack_lost {
                    w.tx_valid += 1;
                }
            }
        }
    }

    fn record_rx(&mut self, sn: Sn, stamp: TimeMs) {
        let capacity = self.capacity;
        if let Some(w) = &mut self.window {
            if w.covers(sn, capacity) {
                w.rx_stamps.push(stamp);
            }
        }
    }

    fn ready(&self) -> bool {
        self.window.as_ref().is_some_and(|w| {
            w.enrolled == self.capacity
                && w.tx_valid + w.enrolled_lost >= self.capacity
                && w.rx_stamps.len() >= self.capacity
        })
    }

    fn take(&mut self) -> (Vec<(TimeMs, bool)>, Vec<TimeMs>) {
        let w = self.window.take().expect("window must be open");
        (w.tx_raw, w.rx_stamps)
    }
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    engine: Engine<EventKind>,
    rng: RandomSource,
    schedule: RtdSchedule,
    current_rtd: TimeMs,
    retx: RetransmissionModel,
    ack_loss: AckLossModel,
    tx: Transmitter,
    rx: Receiver,
    rlc: AmReceiver,
    controller: EstimationController,
    timers: TimerValues,
    observation_timers: TimerValues,
    /// True once tuned values are in force; false during observation windows.
    converged: bool,
    estimates: Option<(u32, u32, u64)>,
    submitted: u64,
    last_arrival: TimeMs,
    metrics: RunMetrics,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self, ScenarioError> {
        let schedule = cfg.effective_rtd_schedule()?;
        let rtd0 = schedule.rtd_at(TimeMs::ZERO);
        let processing = &cfg.link.processing;
        let t_pro = processing.total();

        let worst = TimerValues {
            t_d: optimal_discard_timer(WORST_CASE_ATTEMPTS, rtd0, t_pro),
            t_r: reordering_timer(WORST_CASE_ATTEMPTS, rtd0, t_pro),
            t_re: reassembly_timer(
                WORST_CASE_ATTEMPTS,
                rtd0,
                TimeMs(processing.rlc_ms),
                TimeMs(processing.lower_ms),
            ),
        };
        let worst_b = optimal_buffer_size(WORST_CASE_ATTEMPTS, rtd0, t_pro, cfg.r_p);
        let observation_timers = TimerValues {
            t_d: TimeMs(cfg.observation_timer_ms),
            t_r: TimeMs(cfg.observation_timer_ms),
            t_re: TimeMs(cfg.observation_timer_ms),
        };

        let (timers, converged, estimates, adaptive) = match cfg.timer_policy {
            TimerPolicy::Adaptive => (observation_timers, false, None, true),
            TimerPolicy::WorstCase32 => (
                worst,
                true,
                Some((WORST_CASE_ATTEMPTS, WORST_CASE_ATTEMPTS, worst_b)),
                false,
            ),
            TimerPolicy::Fixed { t_d, t_r, t_re } => (
                TimerValues {
                    t_d: TimeMs(t_d),
                    t_r: TimeMs(t_r),
                    t_re: TimeMs(t_re),
                },
                true,
                None,
                false,
            ),
        };

        let capacity = match cfg.buffer_policy {
            BufferPolicy::Cells(n) => n,
            BufferPolicy::Optimal => worst_b,
        } as usize;

        let mut controller = EstimationController::new(adaptive, cfg.observation_o);
        controller.open();

        let metrics = RunMetrics {
            scenario_id: cfg.scenario_id.clone(),
            seed: cfg.seed,
            mu: cfg.mu,
            ..RunMetrics::default()
        };

        Ok(Run {
            cfg,
            engine: Engine::new(),
            rng: RandomSource::from_seed(cfg.seed),
            current_rtd: rtd0,
            schedule,
            retx: cfg.retransmission_model(),
            ack_loss: cfg.ack_loss_model(),
            tx: Transmitter::new(capacity),
            rx: Receiver::new(),
            rlc: AmReceiver::new(),
            controller,
            timers,
            observation_timers,
            converged,
            estimates,
            submitted: 0,
            last_arrival: TimeMs::ZERO,
            metrics,
        })
    }

    fn t_pro_total(&self) -> TimeMs {
        self.cfg.link.processing.total()
    }

    fn draw_attempts(&mut self) -> u32 {
        self.retx
            .draw_attempts(&mut self.rng)
            .expect("attempt model validated with the config")
    }

    fn execute(&mut self) {
        self.engine
            .schedule(EventKind::SduArrival, TimeMs::ZERO)
            .expect("initial arrival");
        if self.controller.enabled {
            self.engine
                .schedule(EventKind::AdaptationTick, TimeMs(self.cfg.adaptation_period_ms))
                .expect("first adaptation tick");
        }
        while let Some(event) = self.engine.pop_due(None) {
            self.track_rtd_regime();
            match event.kind {
                EventKind::SduArrival => self.on_sdu_arrival(),
                EventKind::PduDelivered {
                    sn,
                    part,
                    parts,
                    created_at,
                } => self.on_pdu_delivered(sn, part, parts, created_at),
                EventKind::AckDelivered { sn } => self.on_ack_delivered(sn),
                EventKind::DiscardExpiry { sn } => self.on_discard_expiry(sn),
                EventKind::ReorderingExpiry => {
                    let now = self.engine.now();
                    let t_r = self.timers.t_r;
                    self.rx.on_reordering_expiry(now, t_r, &mut self.engine);
                }
                EventKind::ReassemblyExpiry { sdu_id } => {
                    let now = self.engine.now();
                    self.rlc.on_reassembly_expiry(sdu_id, now);
                }
                EventKind::AdaptationTick => self.on_adaptation_tick(),
            }
        }
    }

    fn track_rtd_regime(&mut self) {
        let rtd = self.schedule.rtd_at(self.engine.now());
        if rtd != self.current_rtd {
            self.current_rtd = rtd;
            self.controller.restart();
        }
    }

    fn enter_observation(&mut self) {
        self.timers = self.observation_timers;
        self.converged = false;
    }

    fn on_sdu_arrival(&mut self) {
        let now = self.engine.now();
        let k = self.draw_attempts();
        let ack_lost = self.ack_loss.draw_ack_lost(&mut self.rng);
        let ack_sojourn = ack_delay(k, self.current_rtd, self.t_pro_total(), self.cfg.processing_mode);
        let flight = FlightInfo {
            attempts_k: k,
            ack_lost,
            ack_sojourn,
        };
        let outcome = self.tx.submit(
            now,
            self.timers.t_d,
            flight,
            self.converged,
            &mut self.engine,
        );
        if let SubmitOutcome::Accepted(sn) = outcome {
            self.metrics.record_accept(sn, now);
            self.controller.on_submit(sn, ack_lost);
            self.launch_flight(sn, now, now, k);
            if !ack_lost {
                self.engine
                    .schedule(EventKind::AckDelivered { sn }, now + ack_sojourn)
                    .expect("ack in the future");
            }
        }
        self.submitted += 1;
        if self.submitted < self.cfg.total_packets {
            let next = TimeMs(self.submitted as f64 / self.cfg.r_p);
            self.engine
                .schedule(EventKind::SduArrival, next)
                .expect("arrival grid is monotone");
        } else {
            self.last_arrival = now;
        }
    }

    /// Schedule the receiver-side deliveries for one end-to-end cycle of an
    /// SDU. With fragmentation every part's delivery is an independent draw.
    fn launch_flight(&mut self, sn: Sn, created_at: TimeMs, launch_at: TimeMs, k_primary: u32) {
        let parts = self.cfg.parts_per_sdu;
        for part in 0..parts {
            let k = if parts == 1 { k_primary } else { self.draw_attempts() };
            let delay = delivery_delay(k, self.current_rtd, self.t_pro_total(), self.cfg.processing_mode);
            self.engine
                .schedule(
                    EventKind::PduDelivered {
                        sn,
                        part,
                        parts,
                        created_at,
                    },
                    launch_at + delay,
                )
                .expect("delivery in the future");
        }
    }

    fn on_pdu_delivered(&mut self, sn: Sn, part: u16, parts: u16, created_at: TimeMs) {
        let now = self.engine.now();
        let t_re = self.timers.t_re;
        let outcome = self
            .rlc
            .on_pdu(sn, part, parts, now, t_re, &mut self.engine);
        if outcome != AmRxOutcome::Complete {
            return;
        }
        let t_r = self.timers.t_r;
        match self.rx.on_pdu(sn, now, t_r, &mut self.engine) {
            RxOutcome::Duplicate => {}
            RxOutcome::DeliveredInOrder(_) | RxOutcome::Held => {
                self.controller.record_rx(sn, now - created_at);
                self.maybe_adapt();
            }
        }
    }

    fn on_ack_delivered(&mut self, sn: Sn) {
        let now = self.engine.now();
        match self.tx.on_ack(sn, now, &mut self.engine) {
            AckOutcome::Acked { sojourn, .. } => {
                self.metrics.record_acked(sn);
                self.controller.record_tx(sn, sojourn, false);
                self.maybe_adapt();
            }
            AckOutcome::UnknownSn => {}
        }
    }

    fn on_discard_expiry(&mut self, sn: Sn) {
        let now = self.engine.now();
        let outcome = self.tx.on_discard_expiry(
            sn,
            now,
            self.timers.t_d,
            self.cfg.max_tx_cycles,
            &mut self.engine,
        );
        match outcome {
            ExpiryOutcome::Retransmit {
                created_at,
                prev_flight,
                first_expiry,
                metric_eligible,
            } => {
                self.note_lost_ack_expiry(sn, created_at, prev_flight, first_expiry, metric_eligible);
                // Fresh end-to-end cycle with new channel draws.
                let k = self.draw_attempts();
                let ack_lost = self.ack_loss.draw_ack_lost(&mut self.rng);
                let ack_from_now =
                    ack_delay(k, self.current_rtd, self.t_pro_total(), self.cfg.processing_mode);
                self.tx.set_flight(
                    sn,
                    FlightInfo {
                        attempts_k: k,
                        ack_lost,
                        ack_sojourn: (now - created_at) + ack_from_now,
                    },
                );
                self.launch_flight(sn, created_at, now, k);
                if !ack_lost {
                    self.engine
                        .schedule(EventKind::AckDelivered { sn }, now + ack_from_now)
                        .expect("ack in the future");
                }
            }
            ExpiryOutcome::FinalDiscard {
                created_at,
                prev_flight,
                first_expiry,
                metric_eligible,
            } => {
                self.note_lost_ack_expiry(sn, created_at, prev_flight, first_expiry, metric_eligible);
            }
        }
    }

    /// A first expiry caused by a lost ACK yields a raw (filtered) observation
    /// sample and, for SDUs governed by converged timers, an additional-delay
    /// sample against the moment the exchange would have completed.
    fn note_lost_ack_expiry(
        &mut self,
        sn: Sn,
        created_at: TimeMs,
        prev_flight: FlightInfo,
        first_expiry: bool,
        metric_eligible: bool,
    ) {
        if !first_expiry || !prev_flight.ack_lost {
            return;
        }
        let now = self.engine.now();
        self.controller.record_tx(sn, now - created_at, true);
        if metric_eligible {
            let sample = additional_delay_sample(now - created_at, prev_flight.ack_sojourn);
            self.metrics.additional_delay_samples.push(sample.0);
        }
    }

    fn on_adaptation_tick(&mut self) {
        if self.submitted >= self.cfg.total_packets {
            return;
        }
        let now = self.engine.now();
        self.engine
            .schedule(
                EventKind::AdaptationTick,
                now + TimeMs(self.cfg.adaptation_period_ms),
            )
            .expect("next tick");
        if !self.controller.is_open() {
            self.controller.open();
            self.enter_observation();
        }
    }

    fn maybe_adapt(&mut self) {
        if !self.controller.ready() {
            return;
        }
        let now = self.engine.now();
        let (tx_raw, rx_stamps) = self.controller.take();
        let obs_tx = filter_ack_lost(&tx_raw, self.cfg.observation_o)
            .expect("window closes only with enough valid samples");
        let obs_rx = ObservationSet::from_stamps(
            ObservationSide::Receiver,
            self.cfg.observation_o,
            rx_stamps,
        )
        .expect("receiver stamps are positive");
        match adapt(
            &obs_tx,
            &obs_rx,
            self.current_rtd,
            &self.cfg.link.processing,
            self.cfg.r_p,
            now,
            TimeMs(self.cfg.adaptation_period_ms),
        ) {
            Ok((config, b_star)) => {
                self.timers = TimerValues {
                    t_d: config.t_d_ms,
                    t_r: config.t_r_ms,
                    t_re: config.t_re_ms,
                };
                self.converged = true;
                self.estimates = Some((config.n_hat, config.m_hat, b_star));
                if self.cfg.buffer_policy == BufferPolicy::Optimal {
                    self.tx.resize_buffer(b_star as usize);
                }
                self.metrics
                    .timer_history
                    .push(AdaptationRecord::from_config(now, &config, b_star));
            }
            Err(_) => {
                // Keep the previous configuration and re-observe at the next
                // tick. Unreachable with the readiness gate above.
            }
        }
    }

    fn into_metrics(mut self) -> RunMetrics {
        let txc = self.tx.counters();
        self.metrics.accepted = txc.accepted;
        self.metrics.rejected = txc.rejected;
        self.metrics.acked = txc.acked;
        self.metrics.expired_final = txc.expired_final;
        self.metrics.unknown_acks = txc.unknown_acks;
        self.metrics.peak_occupancy = self.tx.peak_occupancy();
        self.metrics.occupancy_violations = self.tx.occupancy_violations();
        self.metrics.buffer_cells = self.tx.capacity();

        let rxc = self.rx.counters();
        self.metrics.delivered_in_order = rxc.delivered_in_order;
        self.metrics.duplicates = rxc.duplicates;
        self.metrics.reorder_losses = rxc.reorder_losses;
        self.metrics.delivery_order_violations = self.rx.order_violations();

        let rlcc = self.rlc.counters();
        self.metrics.completed_sdus = rlcc.completed_sdus;
        self.metrics.reassembly_expiries = rlcc.expired_incomplete;
        self.metrics.late_discards = rlcc.late_discards;

        if let Some((n_hat, m_hat, b_star)) = self.estimates {
            self.metrics.n_hat = n_hat;
            self.metrics.m_hat = m_hat;
            self.metrics.b_star = b_star;
        }
        self.metrics.t_d_ms = self.timers.t_d.0;
        self.metrics.t_r_ms = self.timers.t_r.0;
        self.metrics.t_re_ms = self.timers.t_re.0;

        self.metrics.finalize(self.timers.t_d, self.last_arrival);
        self.metrics
    }
}

/// Execute one scenario to completion. Deterministic for a given config and
/// seed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunMetrics, ScenarioError> {
    cfg.validate()?;
    let mut run = Run::new(cfg)?;
    run.execute();
    Ok(run.into_metrics())
}

fn sweep_point(
    base: &ScenarioConfig,
    field: SweepField,
    value: f64,
    index: usize,
) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = base.clone();
    cfg.sweep = None;
    cfg.seed = base.seed + index as u64;
    match field {
        SweepField::BufferFraction => {
            let reference = base.reference_b_star()?;
            let cells = ((value * reference as f64).round() as u64).max(1);
            cfg.buffer_policy = BufferPolicy::Cells(cells);
            cfg.scenario_id = format!("{}:buffer_fraction={}", base.scenario_id, value);
        }
        SweepField::Mu => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(ScenarioError::Validation {
                    problems: vec![format!("mu sweep value {value} is not a non-negative integer")],
                });
            }
            cfg.mu = value as u32;
            cfg.scenario_id = format!("{}:mu={}", base.scenario_id, value);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run every sweep point (in parallel; each point owns its engine and RNG)
/// and return the results in sweep order. Point `i` runs with `seed + i`.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<Vec<RunMetrics>, ScenarioError> {
    let spec = cfg.sweep.as_ref().ok_or(ScenarioError::SweepMissing)?;
    if spec.values.is_empty() {
        return Err(ScenarioError::SweepEmpty);
    }
    let points: Vec<ScenarioConfig> = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| sweep_point(cfg, spec.field, v, i))
        .collect::<Result<_, _>>()?;
    points.par_iter().map(run_scenario).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SweepSpec;

    fn defaults() -> ScenarioConfig {
        ScenarioConfig::default()
    }

    #[test]
    fn steady_state_throughput_at_defaults() {
        let mut cfg = defaults();
        cfg.total_packets = 20_000;
        let m = run_scenario(&cfg).unwrap();
        assert_eq!(m.rejected, 0, "optimal buffer must not reject");
        assert_eq!(m.reorder_losses, 0);
        assert_eq!(m.occupancy_violations, 0);
        assert_eq!(m.delivery_order_violations, 0);
        assert_eq!(m.accepted, m.acked + m.expired_final);
        let rate = m.effective_rate.expect("window must be valid");
        assert!((rate - 10.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn worst_case_additional_delay_matches_oracle() {
        let mut cfg = defaults();
        cfg.timer_policy = TimerPolicy::WorstCase32;
        cfg.p_ack_loss = 0.05;
        cfg.seed = 11;
        let m = run_scenario(&cfg).unwrap();
        // 32 * 22 - (5.5 * 20 + 2) = 592 ms.
        let avg = m.avg_additional_delay().unwrap();
        assert!((avg - 592.0).abs() < 592.0 * 0.05, "avg {avg}");
        assert_eq!(m.n_hat, 32);
        assert_eq!(m.t_d_ms, 704.0);
    }

    #[test]
    fn identical_seed_identical_metrics() {
        let mut cfg = defaults();
        cfg.p_ack_loss = 0.05;
        cfg.total_packets = 2_000;
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lost_acks_retransmit_and_terminate() {
        let mut cfg = defaults();
        cfg.p_ack_loss = 0.3;
        cfg.total_packets = 5_000;
        cfg.seed = 3;
        let m = run_scenario(&cfg).unwrap();
        assert_eq!(m.accepted, m.acked + m.expired_final);
        assert!(m.duplicates > 0, "retransmissions must reach the receiver as duplicates");
        assert!(!m.additional_delay_samples.is_empty());
        // Receiver saw every SDU exactly once in order.
        assert_eq!(m.delivered_in_order, m.accepted);
        assert_eq!(m.reorder_losses, 0);
    }

    #[test]
    fn fragmentation_completes_with_adequate_timer() {
        let mut cfg = defaults();
        cfg.parts_per_sdu = 4;
        cfg.total_packets = 2_000;
        cfg.seed = 5;
        let m = run_scenario(&cfg).unwrap();
        assert_eq!(m.reassembly_expiries, 0);
        assert_eq!(m.late_discards, 0);
        assert_eq!(m.completed_sdus, m.accepted);
        assert_eq!(m.reorder_losses, 0);
    }

    #[test]
    fn tight_fixed_reassembly_timer_expires_fragments() {
        let mut cfg = defaults();
        cfg.parts_per_sdu = 2;
        cfg.total_packets = 1_000;
        cfg.timer_policy = TimerPolicy::Fixed {
            t_d: 1500.0,
            t_r: 1500.0,
            t_re: 5.0,
        };
        cfg.seed = 7;
        let m = run_scenario(&cfg).unwrap();
        assert!(m.reassembly_expiries > 0, "5 ms cannot cover the part spread");
        assert!(m.late_discards > 0);
        assert_eq!(m.completed_sdus + m.reassembly_expiries, m.accepted);
        // Expired SDUs never reach PDCP: the reordering timer skips them.
        assert_eq!(m.reorder_losses, m.reassembly_expiries);
        assert_eq!(m.delivered_in_order, m.completed_sdus);
    }

    #[test]
    fn readaptation_follows_rtd_schedule() {
        let mut cfg = defaults();
        cfg.fixed_attempts = Some(5);
        cfg.rtd_schedule = Some(
            RtdSchedule::new(vec![(TimeMs(0.0), TimeMs(20.0)), (TimeMs(2_000.0), TimeMs(14.0))])
                .unwrap(),
        );
        cfg.adaptation_period_ms = 500.0;
        cfg.total_packets = 25_000;
        let m = run_scenario(&cfg).unwrap();

        let before: Vec<&AdaptationRecord> = m
            .timer_history
            .iter()
            .filter(|r| r.time.0 < 2_000.0)
            .collect();
        let after: Vec<&AdaptationRecord> = m
            .timer_history
            .iter()
            .filter(|r| r.time.0 >= 2_000.0)
            .collect();
        assert!(!before.is_empty() && !after.is_empty());
        for r in &before {
            assert_eq!(r.n_hat, 5);
            assert_eq!(r.t_d_ms.0, 110.0);
            assert_eq!(r.b_star, 1100);
        }
        for r in &after {
            assert_eq!(r.n_hat, 5);
            assert_eq!(r.t_d_ms.0, 80.0, "t_d must follow the 14 ms regime");
            assert_eq!(r.b_star, 800);
        }
        assert_eq!(m.rejected, 0, "transition must stay lossless");
        assert_eq!(m.occupancy_violations, 0);
    }

    #[test]
    fn sweep_errors() {
        let cfg = defaults();
        assert!(matches!(run_sweep(&cfg), Err(ScenarioError::SweepMissing)));
        let mut cfg = defaults();
        cfg.sweep = Some(SweepSpec {
            field: SweepField::Mu,
            values: vec![],
        });
        assert!(matches!(run_sweep(&cfg), Err(ScenarioError::SweepEmpty)));
    }

    #[test]
    fn buffer_sweep_runs_in_order_with_derived_seeds() {
        let mut cfg = defaults();
        cfg.fixed_attempts = Some(1);
        cfg.total_packets = 3_000;
        cfg.seed = 100;
        cfg.sweep = Some(SweepSpec {
            field: SweepField::BufferFraction,
            values: vec![0.5, 1.0],
        });
        let runs = run_sweep(&cfg).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].seed, 100);
        assert_eq!(runs[1].seed, 101);
        assert_eq!(runs[0].buffer_cells, 110);
        assert_eq!(runs[1].buffer_cells, 220);
        let r0 = runs[0].effective_rate.unwrap();
        let r1 = runs[1].effective_rate.unwrap();
        assert!(r0 < r1, "throughput must grow with the buffer");
    }
}
