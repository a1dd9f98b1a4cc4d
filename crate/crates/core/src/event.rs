//! Event vocabulary shared by the protocol entities and the run loop.

use crate::sim::TimeMs;

/// PDCP sequence number. Unbounded; wraparound is a wire-format concern the
/// model does not carry.
pub type Sn = u64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Next SDU handed down from the traffic source.
    SduArrival,
    /// One RLC PDU (part of an SDU) reaching the receiver.
    PduDelivered {
        sn: Sn,
        part: u16,
        parts: u16,
        created_at: TimeMs,
    },
    /// Per-SDU acknowledgement reaching the PDCP transmitter.
    AckDelivered { sn: Sn },
    /// Transmit-side discard timer for one buffered SDU copy.
    DiscardExpiry { sn: Sn },
    /// Receive-side PDCP reordering timer.
    ReorderingExpiry,
    /// Receive-side RLC reassembly timer for one partially received SDU.
    ReassemblyExpiry { sdu_id: Sn },
    /// Periodic trigger for opening a fresh observation window.
    AdaptationTick,
}
