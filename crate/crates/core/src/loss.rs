//! Ground-truth channel model. Lower-layer retransmissions are not simulated
//! individually; each packet draws an effective attempt count `k` and the
//! delay algebra converts `k` into a receiver delivery time and a transmitter
//! ACK time. ACK loss is an independent Bernoulli draw per packet.

use thiserror::Error;

use crate::sim::{RandomSource, TimeMs};

/// Offsets of the uniform attempt interval around the mean: `[mu-3, mu+4]`.
pub const ATTEMPT_LO_OFFSET: i64 = -3;
pub const ATTEMPT_HI_OFFSET: i64 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("mean attempts mu = {mu} is too small; mu - 3 must be at least 1")]
    ConfigError { mu: u32 },
    #[error("ack loss probability {p} outside [0, 1)")]
    InvalidProbability { p: f64 },
}

/// How per-attempt processing is charged in the delay algebra.
///
/// `PerJourney` charges the layer processing once per packet journey, which
/// makes the attempt estimators exact inverses of the delay model.
/// `PerAttempt` charges it on every attempt and is kept for sensitivity runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessingMode {
    PerJourney,
    PerAttempt,
}

/// Attempt-count distribution for the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptDistribution {
    /// Uniform on `[mu-3, mu+4]`; requires `mu >= 4`.
    Uniform { mu: u32 },
    /// Every packet takes exactly `k` attempts. Degenerate channel used when
    /// an experiment needs a deterministic cycle.
    Fixed { k: u32 },
}

/// Effective retransmission behaviour for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetransmissionModel {
    pub attempts: AttemptDistribution,
    pub processing_mode: ProcessingMode,
}

impl RetransmissionModel {
    pub fn validate(&self) -> Result<(), LossError> {
        match self.attempts {
            AttemptDistribution::Uniform { mu } => {
                if (mu as i64) + ATTEMPT_LO_OFFSET < 1 {
                    return Err(LossError::ConfigError { mu });
                }
            }
            AttemptDistribution::Fixed { k } => {
                if k < 1 {
                    return Err(LossError::ConfigError { mu: k });
                }
            }
        }
        Ok(())
    }

    /// Draw the attempt count for one packet. The same draw serves the
    /// transmitter and receiver sides (N = M on the true channel).
    pub fn draw_attempts(&self, rng: &mut RandomSource) -> Result<u32, LossError> {
        self.validate()?;
        match self.attempts {
            AttemptDistribution::Uniform { mu } => {
                let lo = mu as i64 + ATTEMPT_LO_OFFSET;
                let hi = mu as i64 + ATTEMPT_HI_OFFSET;
                Ok(rng.draw_uniform_int(lo, hi).expect("validated range") as u32)
            }
            AttemptDistribution::Fixed { k } => Ok(k),
        }
    }
}

/// Receiver-side sojourn for a packet that needed `k` attempts.
pub fn delivery_delay(k: u32, r_d: TimeMs, t_pro_total: TimeMs, mode: ProcessingMode) -> TimeMs {
    debug_assert!(k >= 1);
    let k = k as f64;
    match mode {
        ProcessingMode::PerJourney => TimeMs(k * (r_d.0 / 2.0) + 2.0 * t_pro_total.0),
        ProcessingMode::PerAttempt => TimeMs(k * (r_d.0 / 2.0 + 2.0 * t_pro_total.0)),
    }
}

/// Transmitter-side sojourn until the ACK arrives (when it is not lost).
pub fn ack_delay(k: u32, r_d: TimeMs, t_pro_total: TimeMs, mode: ProcessingMode) -> TimeMs {
    debug_assert!(k >= 1);
    let k = k as f64;
    match mode {
        ProcessingMode::PerJourney => TimeMs(k * r_d.0 + 4.0 * t_pro_total.0),
        ProcessingMode::PerAttempt => TimeMs(k * (r_d.0 + 4.0 * t_pro_total.0)),
    }
}

/// Independent per-packet ACK-loss process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckLossModel {
    pub p_ack_loss: f64,
}

impl AckLossModel {
    pub fn new(p_ack_loss: f64) -> Result<Self, LossError> {
        if !(0.0..1.0).contains(&p_ack_loss) {
            return Err(LossError::InvalidProbability { p: p_ack_loss });
        }
        Ok(AckLossModel { p_ack_loss })
    }

    pub fn draw_ack_lost(&self, rng: &mut RandomSource) -> bool {
        if self.p_ack_loss == 0.0 {
            return false;
        }
        rng.draw_bool(self.p_ack_loss)
    }
}
