//! Per-run counters, time series and the two headline metrics: effective
//! PDCP throughput over a measurement window and the average additional delay
//! suffered by packets whose ACK was lost. CSV emission for sweeps and for
//! the per-adaptation timer log.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::estimator::TimerConfig;
use crate::sim::TimeMs;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("measurement window is empty: start {start} >= end {end}")]
    EmptyWindow { start: f64, end: f64 },
    #[error("no additional-delay samples recorded")]
    NoSamples,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One adaptation event as logged for the timer history CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationRecord {
    pub time: TimeMs,
    pub n_hat: u32,
    pub m_hat: u32,
    pub t_d_ms: TimeMs,
    pub t_r_ms: TimeMs,
    pub t_re_ms: TimeMs,
    pub b_star: u64,
}

impl AdaptationRecord {
    pub fn from_config(time: TimeMs, cfg: &TimerConfig, b_star: u64) -> Self {
        AdaptationRecord {
            time,
            n_hat: cfg.n_hat,
            m_hat: cfg.m_hat,
            t_d_ms: cfg.t_d_ms,
            t_r_ms: cfg.t_r_ms,
            t_re_ms: cfg.t_re_ms,
            b_star,
        }
    }
}

/// Additional delay of a lost-ACK packet: how much later the discard expiry
/// triggered the retransmission compared to the moment the exchange would
/// have completed had the ACK survived. Clamped at zero (a timer that fires
/// before the would-be ACK adds no delay).
pub fn additional_delay_sample(expiry_elapsed: TimeMs, ack_sojourn: TimeMs) -> TimeMs {
    TimeMs((expiry_elapsed.0 - ack_sojourn.0).max(0.0))
}

/// Everything one simulation run reports.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub scenario_id: String,
    pub seed: u64,
    pub mu: u32,

    // Transmit side.
    pub accepted: u64,
    pub rejected: u64,
    pub acked: u64,
    pub expired_final: u64,
    pub unknown_acks: u64,
    pub peak_occupancy: usize,
    pub occupancy_violations: u64,
    pub buffer_cells: usize,

    // Receive side.
    pub delivered_in_order: u64,
    pub duplicates: u64,
    pub reorder_losses: u64,
    pub delivery_order_violations: u64,

    // RLC.
    pub completed_sdus: u64,
    pub reassembly_expiries: u64,
    pub late_discards: u64,

    // Final tuned values (worst-case values for the static policies).
    pub n_hat: u32,
    pub m_hat: u32,
    pub t_d_ms: f64,
    pub t_r_ms: f64,
    pub t_re_ms: f64,
    pub b_star: u64,

    pub timer_history: Vec<AdaptationRecord>,
    pub additional_delay_samples: Vec<f64>,

    /// (accept time, eventually acked) per accepted SDU, indexed by SN.
    pub accept_log: Vec<(f64, bool)>,
    /// Throughput over the standard window, set by `finalize`.
    pub effective_rate: Option<f64>,
}

impl RunMetrics {
    pub fn record_accept(&mut self, sn: u64, at: TimeMs) {
        debug_assert_eq!(self.accept_log.len() as u64, sn);
        self.accept_log.push((at.0, false));
    }

    pub fn record_acked(&mut self, sn: u64) {
        if let Some(entry) = self.accept_log.get_mut(sn as usize) {
            entry.1 = true;
        }
    }

    /// Accepted-and-eventually-acked packets per ms over `[start, end]`.
    pub fn throughput(&self, start: TimeMs, end: TimeMs) -> Result<f64, MetricsError> {
        if end.0 <= start.0 {
            return Err(MetricsError::EmptyWindow {
                start: start.0,
                end: end.0,
            });
        }
        let count = self
            .accept_log
            .iter()
            .filter(|(t, acked)| *acked && *t >= start.0 && *t <= end.0)
            .count();
        Ok(count as f64 / (end.0 - start.0))
    }

    /// Mean additional delay over the recorded lost-ACK samples.
    pub fn avg_additional_delay(&self) -> Result<f64, MetricsError> {
        if self.additional_delay_samples.is_empty() {
            return Err(MetricsError::NoSamples);
        }
        let sum: f64 = self.additional_delay_samples.iter().sum();
        Ok(sum / self.additional_delay_samples.len() as f64)
    }

    /// Compute the standard effective rate: the window opens after a warm-up
    /// of twice the final discard timer and closes at the last arrival.
    pub fn finalize(&mut self, t_d_final: TimeMs, last_arrival: TimeMs) {
        self.effective_rate = self
            .throughput(TimeMs(2.0 * t_d_final.0), last_arrival)
            .ok();
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "nan".to_string(),
    }
}

pub const SWEEP_CSV_HEADER: &str = "scenario_id,seed,mu,buffer_cells,b_star,throughput,\
avg_additional_delay,n_hat,m_hat,t_d,t_r,t_re,blocked,reorder_losses,reassembly_expiries";

/// Write one row per run. Output is byte-deterministic for a fixed input:
/// fixed column order, six-decimal floats, LF newlines, period decimal point.
pub fn emit_csv(path: &Path, runs: &[RunMetrics]) -> Result<usize, MetricsError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for m in runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{}",
            m.scenario_id,
            m.seed,
            m.mu,
            m.buffer_cells,
            m.b_star,
            fmt_opt(m.effective_rate),
            fmt_opt(m.avg_additional_delay().ok()),
            m.n_hat,
            m.m_hat,
            m.t_d_ms,
            m.t_r_ms,
            m.t_re_ms,
            m.rejected,
            m.reorder_losses,
            m.reassembly_expiries,
        )?;
    }
    out.flush()?;
    Ok(runs.len())
}

pub const TIMER_LOG_HEADER: &str = "scenario_id,seed,time,n_hat,m_hat,t_d,t_r,t_re,b_star";

/// Write one row per adaptation event across all runs.
pub fn emit_timer_log(path: &Path, runs: &[RunMetrics]) -> Result<usize, MetricsError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{TIMER_LOG_HEADER}")?;
    let mut rows = 0;
    for m in runs {
        for rec in &m.timer_history {
            writeln!(
                out,
                "{},{},{:.6},{},{},{:.6},{:.6},{:.6},{}",
                m.scenario_id,
                m.seed,
                rec.time.0,
                rec.n_hat,
                rec.m_hat,
                rec.t_d_ms.0,
                rec.t_r_ms.0,
                rec.t_re_ms.0,
                rec.b_star,
            )?;
            rows += 1;
        }
    }
    out.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additional_delay_sample_examples() {
        // Worst-case timer 704 ms against a packet whose exchange would have
        // completed at 66 ms (three per-attempt cycles).
        let s = additional_delay_sample(TimeMs(704.0), TimeMs(66.0));
        assert_eq!(s.0, 638.0);
        // A tight timer equal to the completion bound adds nothing.
        let s = additional_delay_sample(TimeMs(66.0), TimeMs(66.0));
        assert_eq!(s.0, 0.0);
        // Timers that fire early cannot produce negative delay.
        let s = additional_delay_sample(TimeMs(60.0), TimeMs(66.0));
        assert_eq!(s.0, 0.0);
    }

    fn metrics_with_accepts(times: &[(f64, bool)]) -> RunMetrics {
        let mut m = RunMetrics::default();
        for (i, (t, acked)) in times.iter().enumerate() {
            m.record_accept(i as u64, TimeMs(*t));
            if *acked {
                m.record_acked(i as u64);
            }
        }
        m
    }

    #[test]
    fn throughput_counts_acked_accepts_in_window() {
        let m = metrics_with_accepts(&[
            (1.0, true),
            (2.0, true),
            (3.0, false), // never acked: not counted
            (4.0, true),
            (25.0, true), // outside window
        ]);
        let rate = m.throughput(TimeMs(0.0), TimeMs(10.0)).unwrap();
        assert!((rate - 0.3).abs() < 1e-12, "got {rate}");
    }

    #[test]
    fn throughput_rejects_empty_window() {
        let m = RunMetrics::default();
        assert!(matches!(
            m.throughput(TimeMs(5.0), TimeMs(5.0)),
            Err(MetricsError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn avg_additional_delay_requires_samples() {
        let mut m = RunMetrics::default();
        assert!(matches!(
            m.avg_additional_delay(),
            Err(MetricsError::NoSamples)
        ));
        m.additional_delay_samples = vec![592.0, 600.0, 584.0];
        assert!((m.avg_additional_delay().unwrap() - 592.0).abs() < 1e-9);
    }

    fn sample_run(id: &str, seed: u64) -> RunMetrics {
        let mut m = metrics_with_accepts(&[(1.0, true), (2.0, true)]);
        m.scenario_id = id.to_string();
        m.seed = seed;
        m.mu = 5;
        m.buffer_cells = 220;
        m.b_star = 220;
        m.n_hat = 1;
        m.m_hat = 1;
        m.t_d_ms = 22.0;
        m.t_r_ms = 11.0;
        m.t_re_ms = 10.6;
        m.effective_rate = Some(10.0);
        m.timer_history.push(AdaptationRecord {
            time: TimeMs(24.0),
            n_hat: 1,
            m_hat: 1,
            t_d_ms: TimeMs(22.0),
            t_r_ms: TimeMs(11.0),
            t_re_ms: TimeMs(10.6),
            b_star: 220,
        });
        m
    }

    #[test]
    fn csv_row_count_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let runs: Vec<RunMetrics> = (0..7).map(|i| sample_run("sweep", i)).collect();

        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        assert_eq!(emit_csv(&p1, &runs).unwrap(), 7);
        assert_eq!(emit_csv(&p2, &runs).unwrap(), 7);
        let a = std::fs::read(&p1).unwrap();
        let b = std::fs::read(&p2).unwrap();
        assert_eq!(a, b, "same input must emit identical bytes");

        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 8, "header plus 7 rows");
        assert!(text.starts_with("scenario_id,seed,mu,"));
        assert!(!text.contains('\r'), "LF newlines only");
    }

    #[test]
    fn empty_sweep_emits_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        assert_eq!(emit_csv(&p, &[]).unwrap(), 0);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn timer_log_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("timers.csv");
        let runs = vec![sample_run("a", 1), sample_run("b", 2)];
        assert_eq!(emit_timer_log(&p, &runs).unwrap(), 2);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("a,1,24.000000,1,1,22.000000"));
    }
}
