//! Deterministic discrete-event simulation of 5G non-terrestrial-network
//! layer-2 behaviour over a LEO link: PDCP transmit/receive entities, an
//! RLC-AM receiver, a retransmission-folding channel model, and adaptive
//! estimators that tune the discard, reordering and reassembly timers plus
//! the minimal transmit-buffer size from observed packet delays.

pub mod estimator;
pub mod event;
pub mod link;
pub mod loss;
pub mod metrics;
pub mod pdcp;
pub mod rlc;
pub mod run;
pub mod scenario;
pub mod sim;

pub use estimator::{
    adapt, estimate_m, estimate_n, filter_ack_lost, optimal_buffer_size, optimal_discard_timer,
    reassembly_timer, reordering_timer, solve_max_sojourn, ObservationSet, ObservationSide,
    TimerConfig,
};
pub use link::{slant_range_km, LinkParams, ProcessingDelays, RtdSchedule};
pub use loss::{ack_delay, delivery_delay, AckLossModel, AttemptDistribution, ProcessingMode,
    RetransmissionModel};
pub use metrics::{emit_csv, emit_timer_log, AdaptationRecord, RunMetrics};
pub use run::{run_scenario, run_sweep};
pub use scenario::{
    parse_config, render_config, BufferPolicy, ScenarioConfig, ScenarioError, SweepField,
    SweepSpec, TimerPolicy,
};
pub use sim::{Engine, Event, EventId, RandomSource, TimeMs};
