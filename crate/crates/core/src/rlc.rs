//! RLC receive-side behaviour.
//!
//! Acknowledged mode keeps a reassembly buffer per SDU: the first arriving
//! PDU opens an entry and arms the reassembly timer, the last missing PDU
//! completes the SDU and forwards it upward, and an expiry discards whatever
//! is incomplete. Transparent and unacknowledged modes are passthroughs (UM
//! adds sequence numbering); status reporting and ARQ are folded into the
//! per-SDU acknowledgement modelled at PDCP level.

use std::collections::{HashMap, HashSet};

use crate::event::{EventKind, Sn};
use crate::sim::{Engine, EventId, TimeMs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlcMode {
    Transparent,
    Unacknowledged,
    Acknowledged,
}

/// One partially received SDU. `parts_expected` travels as metadata with
/// every PDU of the SDU (the first PDU establishes it).
#[derive(Debug)]
pub struct ReassemblyEntry {
    pub sdu_id: Sn,
    pub first_pdu_at: TimeMs,
    pub parts_expected: u16,
    received_mask: u64,
    pub expiry_event: Option<EventId>,
}

impl ReassemblyEntry {
    fn parts_received(&self) -> u32 {
        self.received_mask.count_ones()
    }

    fn is_complete(&self) -> bool {
        self.parts_received() as u16 == self.parts_expected
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AmCounters {
    pub completed_sdus: u64,
    pub expired_incomplete: u64,
    pub late_discards: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmRxOutcome {
    /// All parts present; the SDU goes up to PDCP now.
    Complete,
    /// Parts still missing; the reassembly timer keeps running.
    Pending,
    /// Part of an SDU already discarded on expiry.
    LateDiscard,
}

/// Receive side of an acknowledged-mode RLC entity.
#[derive(Debug, Default)]
pub struct AmReceiver {
    entries: HashMap<Sn, ReassemblyEntry>,
    expired: HashSet<Sn>,
    counters: AmCounters,
}

impl AmReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn counters(&self) -> AmCounters {
        self.counters
    }

    pub fn pending_entries(&self) -> usize {
        self.entries.len()
    }

    /// One RLC PDU arrives. `parts_expected <= 64` (parts are tracked in a
    /// bitmask; the model never fragments further than that).
    pub fn on_pdu(
        &mut self,
        sdu_id: Sn,
        part_index: u16,
        parts_expected: u16,
        now: TimeMs,
        t_re: TimeMs,
        engine: &mut Engine<EventKind>,
    ) -> AmRxOutcome {
        debug_assert!((1..=64).contains(&parts_expected));
        debug_assert!(part_index < parts_expected);

        if self.expired.contains(&sdu_id) {
            self.counters.late_discards += 1;
            return AmRxOutcome::LateDiscard;
        }

        // Single-part SDUs complete on the spot, no timer needed.
        if parts_expected == 1 && !self.entries.contains_key(&sdu_id) {
            self.counters.completed_sdus += 1;
            return AmRxOutcome::Complete;
        }

        let entry = self.entries.entry(sdu_id).or_insert_with(|| {
            let expiry_event = engine
                .schedule(EventKind::ReassemblyExpiry { sdu_id }, now + t_re)
                .expect("reassembly timer must be in the future");
            ReassemblyEntry {
                sdu_id,
                first_pdu_at: now,
                parts_expected,
                received_mask: 0,
                expiry_event: Some(expiry_event),
            }
        });
        entry.received_mask |= 1u64 << part_index;
        if entry.is_complete() {
            if let Some(ev) = entry.expiry_event.take() {
                engine.cancel(ev);
            }
            self.entries.remove(&sdu_id);
            self.counters.completed_sdus += 1;
            AmRxOutcome::Complete
        } else {
            AmRxOutcome::Pending
        }
    }

    /// Reassembly timer fired: drop the incomplete SDU. Later parts of the
    /// same SDU are counted as late discards.
    pub fn on_reassembly_expiry(&mut self, sdu_id: Sn, _now: TimeMs) -> bool {
        match self.entries.remove(&sdu_id) {
            Some(entry) => {
                debug_assert!(!entry.is_complete());
                self.expired.insert(sdu_id);
                self.counters.expired_incomplete += 1;
                true
            }
            None => false,
        }
    }
}

/// Transparent mode: hand the PDU through unchanged. The RLC processing
/// delay is part of the link's per-journey delay budget, not added here.
pub fn tm_passthrough<T>(pdu: T) -> T {
    pdu
}

/// Unacknowledged mode: transparent forwarding plus sequence numbering.
#[derive(Debug, Default)]
pub struct UmEntity {
    next_sn: Sn,
}

impl UmEntity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn send<T>(&mut self, pdu: T) -> (Sn, T) {
        let sn = self.next_sn;
        self.next_sn += 1;
        (sn, pdu)
    }
}
