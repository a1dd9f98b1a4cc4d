//! PDCP entities.
//!
//! Transmit side: sequence numbering, a fixed-capacity buffer holding one
//! copy of every un-acknowledged SDU, and a per-SDU discard timer. The ACK
//! frees the cell; an expiry triggers one end-to-end retransmission per spare
//! cycle and the last expiry discards the SDU for good.
//!
//! Receive side: duplicate discard, a reordering buffer keyed by sequence
//! number, and a single reordering timer that skips a gap when it fires.

use std::collections::{BTreeMap, HashMap};

use crate::event::{EventKind, Sn};
use crate::sim::{Engine, EventId, TimeMs};

/// Channel outcome for the current end-to-end cycle of one SDU, stamped by
/// the run loop when the cycle is launched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightInfo {
    pub attempts_k: u32,
    pub ack_lost: bool,
    /// Sojourn from `created_at` until the ACK arrives (or would have).
    pub ack_sojourn: TimeMs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SduState {
    Buffered,
    AwaitingAck,
    Acked,
    DiscardedOnExpiry,
}

#[derive(Debug, Clone)]
pub struct SduRecord {
    pub sn: Sn,
    pub created_at: TimeMs,
    pub state: SduState,
    /// End-to-end transmission cycles launched so far (1 on first submit).
    pub attempts: u32,
    pub discard_event: Option<EventId>,
    pub flight: FlightInfo,
    /// False for SDUs submitted while timers were still in the observation
    /// phase; such packets do not feed the additional-delay metric.
    pub metric_eligible: bool,
}

/// Fixed-capacity cell store; one cell holds exactly one SDU copy.
///
/// Shrinking below the current occupancy is deferred: the new capacity takes
/// effect once enough cells have drained, so in-flight copies are never
/// evicted and admission keeps working through a re-adaptation.
#[derive(Debug)]
pub struct TransmitBuffer {
    capacity: usize,
    pending_capacity: Option<usize>,
    occupied: HashMap<Sn, SduRecord>,
}

impl TransmitBuffer {
    pub fn new(capacity: usize) -> Self {
        TransmitBuffer {
            capacity,
            pending_capacity: None,
            occupied: HashMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn occupancy(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_full(&self) -> bool {
        self.occupied.len() >= self.capacity
    }

    pub fn resize(&mut self, target: usize) {
        // Strictly-below check: applying a shrink at exact occupancy would
        // reject the very next arrival mid-transition.
        if self.occupied.len() < target {
            self.capacity = target;
            self.pending_capacity = None;
        } else {
            self.pending_capacity = Some(target);
        }
    }

    fn apply_pending_shrink(&mut self) {
        if let Some(target) = self.pending_capacity {
            if self.occupied.len() < target {
                self.capacity = target;
                self.pending_capacity = None;
            }
        }
    }

    fn insert(&mut self, record: SduRecord) {
        debug_assert!(self.occupied.len() < self.capacity);
        self.occupied.insert(record.sn, record);
    }

    fn remove(&mut self, sn: Sn) -> Option<SduRecord> {
        let rec = self.occupied.remove(&sn);
        if rec.is_some() {
            self.apply_pending_shrink();
        }
        rec
    }

    fn get_mut(&mut self, sn: Sn) -> Option<&mut SduRecord> {
        self.occupied.get_mut(&sn)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TxCounters {
    pub accepted: u64,
    pub rejected: u64,
    pub acked: u64,
    pub expired_final: u64,
    pub unknown_acks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitOutcome {
    Accepted(Sn),
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AckOutcome {
    Acked { created_at: TimeMs, sojourn: TimeMs },
    UnknownSn,
}

/// What a discard expiry decided. Both variants carry what the metrics need:
/// the flight that just timed out and whether this was the first expiry of
/// the SDU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpiryOutcome {
    /// A spare cycle remains: the copy stays in its cell and one end-to-end
    /// retransmission must be launched with a fresh channel draw.
    Retransmit {
        created_at: TimeMs,
        prev_flight: FlightInfo,
        first_expiry: bool,
        metric_eligible: bool,
    },
    /// Attempt budget exhausted: the cell is freed and the SDU ends in
    /// `DiscardedOnExpiry`.
    FinalDiscard {
        created_at: TimeMs,
        prev_flight: FlightInfo,
        first_expiry: bool,
        metric_eligible: bool,
    },
}

/// PDCP transmit entity.
#[derive(Debug)]
pub struct Transmitter {
    buffer: TransmitBuffer,
    next_sn: Sn,
    counters: TxCounters,
    peak_occupancy: usize,
    occupancy_violations: u64,
}

impl Transmitter {
    pub fn new(buffer_cells: usize) -> Self {
        Transmitter {
            buffer: TransmitBuffer::new(buffer_cells),
            next_sn: 0,
            counters: TxCounters::default(),
            peak_occupancy: 0,
            occupancy_violations: 0,
        }
    }

    pub fn counters(&self) -> TxCounters {
        self.counters
    }

    pub fn occupancy(&self) -> usize {
        self.buffer.occupancy()
    }

    pub fn capacity(&self) -> usize {
        self.buffer.capacity()
    }

    pub fn peak_occupancy(&self) -> usize {
        self.peak_occupancy
    }

    pub fn occupancy_violations(&self) -> u64 {
        self.occupancy_violations
    }

    pub fn resize_buffer(&mut self, cells: usize) {
        self.buffer.resize(cells);
        self.check_occupancy();
    }

    fn check_occupancy(&mut self) {
        let occ = self.buffer.occupancy();
        self.peak_occupancy = self.peak_occupancy.max(occ);
        if occ > self.buffer.capacity() {
            self.occupancy_violations += 1;
        }
    }

    /// Admit one SDU: assign the next sequence number, stamp it, buffer the
    /// copy and arm its discard timer. A full buffer rejects the SDU, which
    /// models transmitter-side loss (upper layers would be told to slow
    /// down).
    pub fn submit(
        &mut self,
        now: TimeMs,
        t_d: TimeMs,
        flight: FlightInfo,
        metric_eligible: bool,
        engine: &mut Engine<EventKind>,
    ) -> SubmitOutcome {
        if self.buffer.is_full() {
            self.counters.rejected += 1;
            return SubmitOutcome::Rejected;
        }
        let sn = self.next_sn;
        self.next_sn += 1;
        let mut record = SduRecord {
            sn,
            created_at: now,
            state: SduState::Buffered,
            attempts: 1,
            discard_event: None,
            flight,
            metric_eligible,
        };
        let event = engine
            .schedule(EventKind::DiscardExpiry { sn }, now + t_d)
            .expect("discard timer must be in the future");
        record.discard_event = Some(event);
        record.state = SduState::AwaitingAck; // handed to RLC in this same step
        self.buffer.insert(record);
        self.counters.accepted += 1;
        self.check_occupancy();
        SubmitOutcome::Accepted(sn)
    }

    /// Confirmation of correct reception: cancel the discard timer and free
    /// the cell. ACKs for expired or never-sent SNs are counted and ignored.
    pub fn on_ack(&mut self, sn: Sn, now: TimeMs, engine: &mut Engine<EventKind>) -> AckOutcome {
        match self.buffer.remove(sn) {
            Some(mut record) => {
                debug_assert_eq!(record.state, SduState::AwaitingAck);
                if let Some(ev) = record.discard_event.take() {
                    engine.cancel(ev);
                }
                record.state = SduState::Acked;
                self.counters.acked += 1;
                self.check_occupancy();
                AckOutcome::Acked {
                    created_at: record.created_at,
                    sojourn: now - record.created_at,
                }
            }
            None => {
                self.counters.unknown_acks += 1;
                AckOutcome::UnknownSn
            }
        }
    }

    /// Discard timer fired. With a spare cycle the SDU is retransmitted end
    /// to end (the retransmitted copy re-occupies the cell and gets a fresh
    /// timer at the current `t_d`); otherwise the SDU is dropped for good.
    pub fn on_discard_expiry(
        &mut self,
        sn: Sn,
        now: TimeMs,
        t_d: TimeMs,
        max_cycles: u32,
        engine: &mut Engine<EventKind>,
    ) -> ExpiryOutcome {
        let record = self
            .buffer
            .get_mut(sn)
            .expect("expiry fired for an SN no longer buffered");
        record.discard_event = None;
        let first_expiry = record.attempts == 1;
        let prev_flight = record.flight;
        let created_at = record.created_at;
        let metric_eligible = record.metric_eligible;

        if record.attempts < max_cycles {
            record.attempts += 1;
            let event = engine
                .schedule(EventKind::DiscardExpiry { sn }, now + t_d)
                .expect("discard timer must be in the future");
            record.discard_event = Some(event);
            ExpiryOutcome::Retransmit {
                created_at,
                prev_flight,
                first_expiry,
                metric_eligible,
            }
        } else {
            record.state = SduState::DiscardedOnExpiry;
            self.buffer.remove(sn);
            self.counters.expired_final += 1;
            self.check_occupancy();
            ExpiryOutcome::FinalDiscard {
                created_at,
                prev_flight,
                first_expiry,
                metric_eligible,
            }
        }
    }

    /// Install the fresh channel draw for a retransmission cycle.
    pub fn set_flight(&mut self, sn: Sn, flight: FlightInfo) {
        if let Some(record) = self.buffer.get_mut(sn) {
            record.flight = flight;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RxCounters {
    pub delivered_in_order: u64,
    pub duplicates: u64,
    pub reorder_losses: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxOutcome {
    DeliveredInOrder(u64),
    Held,
    Duplicate,
}

/// PDCP receive entity: in-order delivery with gap skipping on timer expiry.
#[derive(Debug)]
pub struct Receiver {
    expected_sn: Sn,
    held: BTreeMap<Sn, TimeMs>,
    reordering_event: Option<EventId>,
    counters: RxCounters,
    last_delivered: Option<Sn>,
    order_violations: u64,
}

impl Default for Receiver {
    fn default() -> Self {
        Self::new()
    }
}

impl Receiver {
    pub fn new() -> Self {
        Receiver {
            expected_sn: 0,
            held: BTreeMap::new(),
            reordering_event: None,
            counters: RxCounters::default(),
            last_delivered: None,
            order_violations: 0,
        }
    }

    pub fn counters(&self) -> RxCounters {
        self.counters
    }

    pub fn expected_sn(&self) -> Sn {
        self.expected_sn
    }

    pub fn held_len(&self) -> usize {
        self.held.len()
    }

    pub fn order_violations(&self) -> u64 {
        self.order_violations
    }

    fn deliver(&mut self, sn: Sn) {
        if let Some(last) = self.last_delivered {
            if sn <= last {
                self.order_violations += 1;
            }
        }
        self.last_delivered = Some(sn);
        self.counters.delivered_in_order += 1;
    }

    // Deliver expected_sn and every consecutively held successor.
    fn drain_in_order(&mut self) -> u64 {
        let mut count = 0;
        loop {
            if self.held.remove(&self.expected_sn).is_none() {
                break;
            }
            self.deliver(self.expected_sn);
            self.expected_sn += 1;
            count += 1;
        }
        count
    }

    // Cancel any pending timer; re-arm when a gap is still open.
    fn rearm_timer(&mut self, now: TimeMs, t_r: TimeMs, engine: &mut Engine<EventKind>) {
        if let Some(ev) = self.reordering_event.take() {
            engine.cancel(ev);
        }
        if !self.held.is_empty() {
            let ev = engine
                .schedule(EventKind::ReorderingExpiry, now + t_r)
                .expect("reordering timer must be in the future");
            self.reordering_event = Some(ev);
        }
    }

    /// One PDCP SDU arriving from the RLC layer.
    pub fn on_pdu(
        &mut self,
        sn: Sn,
        now: TimeMs,
        t_r: TimeMs,
        engine: &mut Engine<EventKind>,
    ) -> RxOutcome {
        if sn < self.expected_sn || self.held.contains_key(&sn) {
            self.counters.duplicates += 1;
            return RxOutcome::Duplicate;
        }
        if sn == self.expected_sn {
            self.deliver(sn);
            self.expected_sn += 1;
            let count = 1 + self.drain_in_order();
            self.rearm_timer(now, t_r, engine);
            return RxOutcome::DeliveredInOrder(count);
        }
        self.held.insert(sn, now);
        if self.reordering_event.is_none() {
            let ev = engine
                .schedule(EventKind::ReorderingExpiry, now + t_r)
                .expect("reordering timer must be in the future");
            self.reordering_event = Some(ev);
        }
        RxOutcome::Held
    }

    /// Timer fired with the gap still open: skip the missing SNs (counted as
    /// upper-layer losses), deliver what is consecutively held and re-arm for
    /// any remaining gap. Returns (delivered, losses).
    pub fn on_reordering_expiry(
        &mut self,
        now: TimeMs,
        t_r: TimeMs,
        engine: &mut Engine<EventKind>,
    ) -> (u64, u64) {
        self.reordering_event = None;
        let Some((&first_held, _)) = self.held.iter().next() else {
            debug_assert!(false, "reordering timer fired with nothing held");
            return (0, 0);
        };
        let losses = first_held - self.expected_sn;
        self.counters.reorder_losses += losses;
        self.expected_sn = first_held;
        let delivered = self.drain_in_order();
        self.rearm_timer(now, t_r, engine);
        (delivered, losses)
    }
}
