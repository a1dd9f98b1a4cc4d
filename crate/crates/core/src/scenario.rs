//! Scenario configuration: a flat `key = value` text format with dotted
//! section prefixes, full validation, and a canonical renderer such that
//! `parse(render(cfg)) == cfg`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::estimator::optimal_buffer_size;
use crate::link::{LinkParams, ProcessingDelays, RtdSchedule};
use crate::loss::{AckLossModel, AttemptDistribution, ProcessingMode, RetransmissionModel};
use crate::sim::TimeMs;

/// Attempt count the 3GPP-style worst-case baseline assumes (maximum number
/// of lower-layer HARQ processes).
pub const WORST_CASE_ATTEMPTS: u32 = 32;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {}", problems.join("; "))]
    Validation { problems: Vec<String> },
    #[error("sweep value list is empty")]
    SweepEmpty,
    #[error("config has no sweep section")]
    SweepMissing,
    #[error("simulation failed: {0}")]
    Run(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimerPolicy {
    /// Observe, estimate, and tune the timers at runtime.
    Adaptive,
    /// Static timers sized for the worst-case attempt count (32).
    WorstCase32,
    /// Static caller-chosen timer values in ms.
    Fixed { t_d: f64, t_r: f64, t_re: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferPolicy {
    /// Track the estimated minimal size (worst-case sized until the first
    /// adaptation).
    Optimal,
    /// Fixed cell count.
    Cells(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepField {
    /// Values are fractions of the reference minimal buffer size.
    BufferFraction,
    /// Values are mean attempt counts.
    Mu,
}

impl SweepField {
    fn name(&self) -> &'static str {
        match self {
            SweepField::BufferFraction => "buffer_fraction",
            SweepField::Mu => "mu",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub field: SweepField,
    pub values: Vec<f64>,
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub seed: u64,
    pub mu: u32,
    /// When set, every packet takes exactly this many attempts instead of a
    /// uniform draw around `mu`.
    pub fixed_attempts: Option<u32>,
    pub p_ack_loss: f64,
    /// Offered PDCP rate, packets per ms.
    pub r_p: f64,
    pub total_packets: u64,
    /// Observation-set capacity O for the estimators.
    pub observation_o: usize,
    pub adaptation_period_ms: f64,
    /// Timer value used while an observation window is open (3GPP-style
    /// large setting).
    pub observation_timer_ms: f64,
    /// End-to-end transmission cycles per SDU including the first; expiry of
    /// the last cycle discards the SDU.
    pub max_tx_cycles: u32,
    pub timer_policy: TimerPolicy,
    pub buffer_policy: BufferPolicy,
    pub processing_mode: ProcessingMode,
    /// RLC PDUs per SDU; above 1 each part's delivery is an independent
    /// draw, which exercises the reassembly timer.
    pub parts_per_sdu: u16,
    pub link: LinkParams,
    pub rtd_schedule: Option<RtdSchedule>,
    pub sweep: Option<SweepSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario_id: "run".to_string(),
            seed: 1,
            mu: 5,
            fixed_attempts: None,
            p_ack_loss: 0.0,
            r_p: 10.0,
            total_packets: 1000,
            observation_o: 20,
            adaptation_period_ms: 10_000.0,
            observation_timer_ms: 1500.0,
            max_tx_cycles: 2,
            timer_policy: TimerPolicy::Adaptive,
            buffer_policy: BufferPolicy::Optimal,
            processing_mode: ProcessingMode::PerJourney,
            parts_per_sdu: 1,
            link: LinkParams {
                altitude_km: 1200.0,
                elevation_deg: 10.0,
                rtd_override_ms: Some(20.0),
                processing: ProcessingDelays {
                    pdcp_ms: 0.2,
                    rlc_ms: 0.2,
                    lower_ms: 0.1,
                },
            },
            rtd_schedule: None,
            sweep: None,
        }
    }
}

impl ScenarioConfig {
    /// Collect every violated invariant; empty result means the config is
    /// runnable.
    pub fn validation_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.fixed_attempts.is_none() && self.mu < 4 {
            problems.push(format!("mu = {} but mu - 3 must be at least 1", self.mu));
        }
        if let Some(k) = self.fixed_attempts {
            if k < 1 {
                problems.push("fixed_attempts must be at least 1".into());
            }
        }
        let p_ok = self.p_ack_loss.is_finite() && (0.0..1.0).contains(&self.p_ack_loss);
        if !p_ok {
            problems.push(format!("p_ack_loss = {} outside [0, 1)", self.p_ack_loss));
        }
        let r_p_ok = self.r_p.is_finite() && self.r_p > 0.0;
        if !r_p_ok {
            problems.push(format!("r_p = {} must be positive", self.r_p));
        }
        if self.total_packets < self.observation_o as u64 {
            problems.push(format!(
                "total_packets = {} below observation_o = {}",
                self.total_packets, self.observation_o
            ));
        }
        if self.observation_o == 0 {
            problems.push("observation_o must be positive".into());
        }
        let period_ok = self.adaptation_period_ms.is_finite() && self.adaptation_period_ms > 0.0;
        if !period_ok {
            problems.push("adaptation_period_ms must be positive".into());
        }
        let obs_timer_ok = self.observation_timer_ms.is_finite() && self.observation_timer_ms > 0.0;
        if !obs_timer_ok {
            problems.push("observation_timer_ms must be positive".into());
        }
        if self.max_tx_cycles < 1 {
            problems.push("max_tx_cycles must be at least 1".into());
        }
        if self.parts_per_sdu < 1 || self.parts_per_sdu > 64 {
            problems.push(format!(
                "parts_per_sdu = {} outside [1, 64]",
                self.parts_per_sdu
            ));
        }
        let altitude_ok = self.link.altitude_km.is_finite() && self.link.altitude_km > 0.0;
        if !altitude_ok {
            problems.push("link.altitude_km must be positive".into());
        }
        let elevation_ok = self.link.elevation_deg.is_finite()
            && self.link.elevation_deg > 0.0
            && self.link.elevation_deg <= 90.0;
        if !elevation_ok {
            problems.push("link.elevation_deg must be in (0, 90]".into());
        }
        let p = &self.link.processing;
        if p.pdcp_ms < 0.0 || p.rlc_ms < 0.0 || p.lower_ms < 0.0 {
            problems.push("processing delays must be non-negative".into());
        }
        if let TimerPolicy::Fixed { t_d, t_r, t_re } = self.timer_policy {
            let fixed_ok = [t_d, t_r, t_re].iter().all(|v| v.is_finite() && *v > 0.0);
            if !fixed_ok {
                problems.push("fixed timer values must be positive".into());
            }
        }
        if let BufferPolicy::Cells(0) = self.buffer_policy {
            problems.push("buffer_policy cells must be positive".into());
        }
        problems
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let problems = self.validation_problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Validation { problems })
        }
    }

    pub fn retransmission_model(&self) -> RetransmissionModel {
        let attempts = match self.fixed_attempts {
            Some(k) => AttemptDistribution::Fixed { k },
            None => AttemptDistribution::Uniform { mu: self.mu },
        };
        RetransmissionModel {
            attempts,
            processing_mode: self.processing_mode,
        }
    }

    pub fn ack_loss_model(&self) -> AckLossModel {
        AckLossModel {
            p_ack_loss: self.p_ack_loss,
        }
    }

    /// RTD over time: the explicit schedule when present, else the constant
    /// link value.
    pub fn effective_rtd_schedule(&self) -> Result<RtdSchedule, ScenarioError> {
        match &self.rtd_schedule {
            Some(s) => Ok(s.clone()),
            None => {
                let rtd = self
                    .link
                    .rtd_ms()
                    .map_err(|e| ScenarioError::Run(e.to_string()))?;
                Ok(RtdSchedule::constant(rtd))
            }
        }
    }

    /// Largest attempt count the channel can produce; what a converged
    /// estimator is expected to report.
    pub fn expected_max_attempts(&self) -> u32 {
        match self.fixed_attempts {
            Some(k) => k,
            None => self.mu + 4,
        }
    }

    /// A-priori minimal buffer size used to translate buffer-fraction sweep
    /// points into absolute cell counts.
    pub fn reference_b_star(&self) -> Result<u64, ScenarioError> {
        let rtd0 = self.effective_rtd_schedule()?.rtd_at(TimeMs::ZERO);
        Ok(optimal_buffer_size(
            self.expected_max_attempts(),
            rtd0,
            self.link.processing.total(),
            self.r_p,
        ))
    }
}

fn parse_bool_none_f64(value: &str) -> Result<Option<f64>, String> {
    if value == "none" {
        return Ok(None);
    }
    value
        .parse::<f64>()
        .map(Some)
        .map_err(|e| format!("expected a number or 'none': {e}"))
}

fn parse_num<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("bad {what} '{value}': {e}"))
}

fn parse_timer_policy(value: &str) -> Result<TimerPolicy, String> {
    if value == "adaptive" {
        return Ok(TimerPolicy::Adaptive);
    }
    if value == "worst_case_32" {
        return Ok(TimerPolicy::WorstCase32);
    }
    if let Some(rest) = value.strip_prefix("fixed:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err("fixed policy needs three values: fixed:t_d,t_r,t_re".into());
        }
        return Ok(TimerPolicy::Fixed {
            t_d: parse_num(parts[0].trim(), "t_d")?,
            t_r: parse_num(parts[1].trim(), "t_r")?,
            t_re: parse_num(parts[2].trim(), "t_re")?,
        });
    }
    Err(format!(
        "unknown timer_policy '{value}' (adaptive | worst_case_32 | fixed:t_d,t_r,t_re)"
    ))
}

fn parse_buffer_policy(value: &str) -> Result<BufferPolicy, String> {
    if value == "optimal" {
        return Ok(BufferPolicy::Optimal);
    }
    if let Some(rest) = value.strip_prefix("cells:") {
        return Ok(BufferPolicy::Cells(parse_num(rest.trim(), "cell count")?));
    }
    Err(format!(
        "unknown buffer_policy '{value}' (optimal | cells:N)"
    ))
}

fn parse_rtd_schedule(value: &str) -> Result<RtdSchedule, String> {
    let mut segments = Vec::new();
    for item in value.split(',') {
        let (start, rtd) = item
            .trim()
            .split_once(':')
            .ok_or_else(|| format!("bad schedule segment '{item}', expected start:rtd"))?;
        segments.push((
            TimeMs(parse_num(start.trim(), "segment start")?),
            TimeMs(parse_num(rtd.trim(), "segment rtd")?),
        ));
    }
    RtdSchedule::new(segments)
}

fn parse_sweep_field(value: &str) -> Result<SweepField, String> {
    match value {
        "buffer_fraction" => Ok(SweepField::BufferFraction),
        "mu" => Ok(SweepField::Mu),
        other => Err(format!(
            "unknown sweep.field '{other}' (buffer_fraction | mu)"
        )),
    }
}

/// Parse the flat key-value format. Unknown keys and malformed lines are
/// reported with their line number; validation problems are collected after
/// a successful parse.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = ScenarioConfig::default();
    let mut sweep_field: Option<SweepField> = None;
    let mut sweep_values: Option<Vec<f64>> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ScenarioError::Parse {
            line: line_no,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let fail = |message: String| ScenarioError::Parse {
            line: line_no,
            message,
        };

        match key {
            "scenario_id" => cfg.scenario_id = value.to_string(),
            "seed" => cfg.seed = parse_num(value, "seed").map_err(fail)?,
            "mu" => cfg.mu = parse_num(value, "mu").map_err(fail)?,
            "fixed_attempts" => {
                cfg.fixed_attempts = if value == "none" {
                    None
                } else {
                    Some(parse_num(value, "fixed_attempts").map_err(fail)?)
                }
            }
            "p_ack_loss" => cfg.p_ack_loss = parse_num(value, "p_ack_loss").map_err(fail)?,
            "r_p" => cfg.r_p = parse_num(value, "r_p").map_err(fail)?,
            "total_packets" => {
                cfg.total_packets = parse_num(value, "total_packets").map_err(fail)?
            }
            "observation_o" => {
                cfg.observation_o = parse_num(value, "observation_o").map_err(fail)?
            }
            "adaptation_period_ms" => {
                cfg.adaptation_period_ms =
                    parse_num(value, "adaptation_period_ms").map_err(fail)?
            }
            "observation_timer_ms" => {
                cfg.observation_timer_ms =
                    parse_num(value, "observation_timer_ms").map_err(fail)?
            }
            "max_tx_cycles" => {
                cfg.max_tx_cycles = parse_num(value, "max_tx_cycles").map_err(fail)?
            }
            "timer_policy" => cfg.timer_policy = parse_timer_policy(value).map_err(fail)?,
            "buffer_policy" => cfg.buffer_policy = parse_buffer_policy(value).map_err(fail)?,
            "processing_mode" => {
                cfg.processing_mode = match value {
                    "per_journey" => ProcessingMode::PerJourney,
                    "per_attempt" => ProcessingMode::PerAttempt,
                    other => {
                        return Err(fail(format!(
                            "unknown processing_mode '{other}' (per_journey | per_attempt)"
                        )))
                    }
                }
            }
            "parts_per_sdu" => {
                cfg.parts_per_sdu = parse_num(value, "parts_per_sdu").map_err(fail)?
            }
            "link.altitude_km" => {
                cfg.link.altitude_km = parse_num(value, "altitude").map_err(fail)?
            }
            "link.elevation_deg" => {
                cfg.link.elevation_deg = parse_num(value, "elevation").map_err(fail)?
            }
            "link.rtd_override_ms" => {
                cfg.link.rtd_override_ms = parse_bool_none_f64(value).map_err(fail)?
            }
            "link.t_pro_pdcp_ms" => {
                cfg.link.processing.pdcp_ms = parse_num(value, "t_pro_pdcp_ms").map_err(fail)?
            }
            "link.t_pro_rlc_ms" => {
                cfg.link.processing.rlc_ms = parse_num(value, "t_pro_rlc_ms").map_err(fail)?
            }
            "link.t_pro_lower_ms" => {
                cfg.link.processing.lower_ms = parse_num(value, "t_pro_lower_ms").map_err(fail)?
            }
            "rtd_schedule" => {
                cfg.rtd_schedule = Some(parse_rtd_schedule(value).map_err(fail)?)
            }
            "sweep.field" => sweep_field = Some(parse_sweep_field(value).map_err(fail)?),
            "sweep.values" => {
                let mut values = Vec::new();
                if !value.is_empty() {
                    for item in value.split(',') {
                        values.push(parse_num(item.trim(), "sweep value").map_err(&fail)?);
                    }
                }
                sweep_values = Some(values);
            }
            other => {
                return Err(ScenarioError::Parse {
                    line: line_no,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }

    match (sweep_field, sweep_values) {
        (Some(field), Some(values)) => cfg.sweep = Some(SweepSpec { field, values }),
        (None, None) => {}
        _ => {
            return Err(ScenarioError::Parse {
                line: 0,
                message: "sweep.field and sweep.values must be given together".into(),
            })
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text form; `parse_config(render_config(cfg))` reproduces `cfg`.
pub fn render_config(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario_id = {}", cfg.scenario_id);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "mu = {}", cfg.mu);
    if let Some(k) = cfg.fixed_attempts {
        let _ = writeln!(s, "fixed_attempts = {k}");
    }
    let _ = writeln!(s, "p_ack_loss = {}", cfg.p_ack_loss);
    let _ = writeln!(s, "r_p = {}", cfg.r_p);
    let _ = writeln!(s, "total_packets = {}", cfg.total_packets);
    let _ = writeln!(s, "observation_o = {}", cfg.observation_o);
    let _ = writeln!(s, "adaptation_period_ms = {}", cfg.adaptation_period_ms);
    let _ = writeln!(s, "observation_timer_ms = {}", cfg.observation_timer_ms);
    let _ = writeln!(s, "max_tx_cycles = {}", cfg.max_tx_cycles);
    match cfg.timer_policy {
        TimerPolicy::Adaptive => {
            let _ = writeln!(s, "timer_policy = adaptive");
        }
        TimerPolicy::WorstCase32 => {
            let _ = writeln!(s, "timer_policy = worst_case_32");
        }
        TimerPolicy::Fixed { t_d, t_r, t_re } => {
            let _ = writeln!(s, "timer_policy = fixed:{t_d},{t_r},{t_re}");
        }
    }
    match cfg.buffer_policy {
        BufferPolicy::Optimal => {
            let _ = writeln!(s, "buffer_policy = optimal");
        }
        BufferPolicy::Cells(n) => {
            let _ = writeln!(s, "buffer_policy = cells:{n}");
        }
    }
    let _ = writeln!(
        s,
        "processing_mode = {}",
        match cfg.processing_mode {
            ProcessingMode::PerJourney => "per_journey",
            ProcessingMode::PerAttempt => "per_attempt",
        }
    );
    let _ = writeln!(s, "parts_per_sdu = {}", cfg.parts_per_sdu);
    let _ = writeln!(s, "link.altitude_km = {}", cfg.link.altitude_km);
    let _ = writeln!(s, "link.elevation_deg = {}", cfg.link.elevation_deg);
    match cfg.link.rtd_override_ms {
        Some(ms) => {
            let _ = writeln!(s, "link.rtd_override_ms = {ms}");
        }
        None => {
            let _ = writeln!(s, "link.rtd_override_ms = none");
        }
    }
    let _ = writeln!(s, "link.t_pro_pdcp_ms = {}", cfg.link.processing.pdcp_ms);
    let _ = writeln!(s, "link.t_pro_rlc_ms = {}", cfg.link.processing.rlc_ms);
    let _ = writeln!(s, "link.t_pro_lower_ms = {}", cfg.link.processing.lower_ms);
    if let Some(schedule) = &cfg.rtd_schedule {
        let rendered: Vec<String> = schedule
            .segments()
            .iter()
            .map(|(start, rtd)| format!("{}:{}", start.0, rtd.0))
            .collect();
        let _ = writeln!(s, "rtd_schedule = {}", rendered.join(","));
    }
    if let Some(sweep) = &cfg.sweep {
        let _ = writeln!(s, "sweep.field = {}", sweep.field.name());
        let rendered: Vec<String> = sweep.values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "sweep.values = {}", rendered.join(","));
    }
    s
}
