//! Deterministic discrete-event engine: virtual clock, priority event queue,
//! seeded random source.
//!
//! Two runs with the same seed and the same schedule calls produce identical
//! event traces. Simultaneous events dispatch in insertion (id) order. Fire
//! times are quantized to a 1 ns grid so instants that are equal up to
//! floating-point rounding compare equal and take the insertion-order path.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Scheduling grid resolution: steps per ms (grid spacing 1 ns). Far below
/// every delay in the model. The step count is exactly representable, so
/// quantization is multiply-round-divide with no drift.
pub const TIME_GRID_STEPS_PER_MS: f64 = 1e6;

/// Simulation time in milliseconds. Non-negative, totally ordered.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct TimeMs(pub f64);

impl TimeMs {
    pub const ZERO: TimeMs = TimeMs(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for TimeMs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ms", self.0)
    }
}

impl Add for TimeMs {
    type Output = TimeMs;
    fn add(self, rhs: TimeMs) -> TimeMs {
        TimeMs(self.0 + rhs.0)
    }
}

impl Sub for TimeMs {
    type Output = TimeMs;
    fn sub(self, rhs: TimeMs) -> TimeMs {
        TimeMs(self.0 - rhs.0)
    }
}

/// Identifier of a scheduled event, unique per engine instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(pub u64);

/// A dispatched event handed to the run loop.
#[derive(Debug, Clone)]
pub struct Event<K> {
    pub id: EventId,
    pub fire_at: TimeMs,
    pub kind: K,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("cannot schedule event at {fire_at} before current time {now}")]
    SchedulingInPast { fire_at: String, now: String },
    #[error("empty integer range: lo {lo} > hi {hi}")]
    EmptyRange { lo: i64, hi: i64 },
}

struct Scheduled<K> {
    fire_at: TimeMs,
    id: EventId,
    kind: K,
}

// Min-order on (fire_at, id): BinaryHeap is a max-heap, so compare reversed.
impl<K> Ord for Scheduled<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .0
            .total_cmp(&self.fire_at.0)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl<K> PartialOrd for Scheduled<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> PartialEq for Scheduled<K> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at.0.total_cmp(&other.fire_at.0) == Ordering::Equal && self.id == other.id
    }
}

impl<K> Eq for Scheduled<K> {}

/// Event queue plus virtual clock. `K` is the caller's event tag/payload type.
///
/// Cancellation is lazy: cancelled entries stay in the heap and are skipped
/// when popped, so a cancelled event never reaches a handler.
pub struct Engine<K> {
    clock: TimeMs,
    next_id: u64,
    queue: BinaryHeap<Scheduled<K>>,
    pending: HashSet<EventId>,
}

impl<K> Default for Engine<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> Engine<K> {
    pub fn new() -> Self {
        Engine {
            clock: TimeMs::ZERO,
            next_id: 0,
            queue: BinaryHeap::new(),
            pending: HashSet::new(),
        }
    }

    pub fn now(&self) -> TimeMs {
        self.clock
    }

    /// Number of events scheduled and not yet dispatched or cancelled.
    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Enqueue an event. `fire_at` must not precede the current clock.
    pub fn schedule(&mut self, kind: K, fire_at: TimeMs) -> Result<EventId, SimError> {
        if fire_at.0 < self.clock.0 {
            return Err(SimError::SchedulingInPast {
                fire_at: fire_at.to_string(),
                now: self.clock.to_string(),
            });
        }
        debug_assert!(fire_at.0.is_finite());
        let mut fire_at =
            TimeMs((fire_at.0 * TIME_GRID_STEPS_PER_MS).round() / TIME_GRID_STEPS_PER_MS);
        if fire_at.0 < self.clock.0 {
            fire_at = self.clock; // grid rounding must not move an event into the past
        }
        let id = EventId(self.next_id);
        self.next_id += 1;
        self.queue.push(Scheduled { fire_at, id, kind });
        self.pending.insert(id);
        Ok(id)
    }

    /// Convenience for `schedule(kind, now + delay)`.
    pub fn schedule_in(&mut self, kind: K, delay: TimeMs) -> Result<EventId, SimError> {
        self.schedule(kind, self.clock + delay)
    }

    /// Returns true if the event existed and was still pending. A cancelled
    /// event never fires; cancelling twice (or an unknown id) returns false.
    pub fn cancel(&mut self, id: EventId) -> bool {
        self.pending.remove(&id)
    }

    /// Pop the next non-cancelled event with `fire_at <= t_end` (if given),
    /// advancing the clock to its fire time.
    pub fn pop_due(&mut self, t_end: Option<TimeMs>) -> Option<Event<K>> {
        loop {
            if let Some(limit) = t_end {
                let head = self.queue.peek()?;
                if head.fire_at.0 > limit.0 {
                    return None;
                }
            }
            let entry = self.queue.pop()?;
            if !self.pending.remove(&entry.id) {
                continue; // cancelled
            }
            debug_assert!(entry.fire_at.0 >= self.clock.0, "clock must not run backwards");
            self.clock = entry.fire_at;
            return Some(Event {
                id: entry.id,
                fire_at: entry.fire_at,
                kind: entry.kind,
            });
        }
    }

    /// Dispatch every event with `fire_at <= t_end` in (fire_at, id) order,
    /// then set the clock to `t_end`. Returns the number dispatched.
    pub fn run_until<F>(&mut self, t_end: TimeMs, mut handler: F) -> usize
    where
        F: FnMut(&mut Engine<K>, Event<K>),
    {
        let mut dispatched = 0;
        while let Some(event) = self.pop_due(Some(t_end)) {
            handler(self, event);
            dispatched += 1;
        }
        if t_end.0 > self.clock.0 {
            self.clock = t_end;
        }
        dispatched
    }

    /// Dispatch until the queue is empty. The clock ends at the last event.
    pub fn run_to_completion<F>(&mut self, mut handler: F) -> usize
    where
        F: FnMut(&mut Engine<K>, Event<K>),
    {
        let mut dispatched = 0;
        while let Some(event) = self.pop_due(None) {
            handler(self, event);
            dispatched += 1;
        }
        dispatched
    }
}

/// Seeded PRNG handle shared by one simulation run (ChaCha12; the stream is
/// identical for a given seed on every platform).
pub struct RandomSource {
    rng: ChaCha12Rng,
    seed: u64,
}

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        RandomSource {
            rng: ChaCha12Rng::seed_from_u64(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform integer in `[lo, hi]`, each value with probability 1/(hi-lo+1).
    pub fn draw_uniform_int(&mut self, lo: i64, hi: i64) -> Result<i64, SimError> {
        if lo > hi {
            return Err(SimError::EmptyRange { lo, hi });
        }
        Ok(self.rng.random_range(lo..=hi))
    }

    /// Bernoulli draw: true with probability `p`.
    pub fn draw_bool(&mut self, p: f64) -> bool {
        debug_assert!((0.0..=1.0).contains(&p));
        self.rng.random_bool(p)
    }
}
