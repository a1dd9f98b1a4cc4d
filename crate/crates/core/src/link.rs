//! LEO link geometry and delay constants: slant range, round-trip delay, the
//! per-layer processing delays, and a piecewise-constant RTD schedule for
//! pass-dynamics experiments.

use thiserror::Error;

use crate::sim::TimeMs;

/// Mean spherical Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Speed of light, km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("invalid geometry: altitude {altitude_km} km, elevation {elevation_deg} deg")]
    InvalidGeometry { altitude_km: f64, elevation_deg: f64 },
}

/// Per-layer processing delays in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessingDelays {
    pub pdcp_ms: f64,
    pub rlc_ms: f64,
    pub lower_ms: f64,
}

impl ProcessingDelays {
    pub fn total(&self) -> TimeMs {
        TimeMs(self.pdcp_ms + self.rlc_ms + self.lower_ms)
    }

    /// Sum seen below the PDCP layer (RLC plus MAC/PHY).
    pub fn below_pdcp(&self) -> TimeMs {
        TimeMs(self.rlc_ms + self.lower_ms)
    }
}

/// Satellite link parameters. The RTD either comes from an explicit override
/// or is derived from spherical-Earth geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub altitude_km: f64,
    pub elevation_deg: f64,
    pub rtd_override_ms: Option<f64>,
    pub processing: ProcessingDelays,
}

impl LinkParams {
    /// Round-trip delay: the override when present, else 2 * slant / c.
    pub fn rtd_ms(&self) -> Result<TimeMs, LinkError> {
        if let Some(ms) = self.rtd_override_ms {
            return Ok(TimeMs(ms));
        }
        let slant = slant_range_km(self.altitude_km, self.elevation_deg)?;
        Ok(TimeMs(2.0 * slant / SPEED_OF_LIGHT_KM_S * 1000.0))
    }

    pub fn total_processing_ms(&self) -> TimeMs {
        self.processing.total()
    }
}

/// Slant range from a ground terminal to a satellite at `altitude_km` seen
/// under `elevation_deg`, spherical Earth:
/// d = sqrt((R sin e)^2 + h^2 + 2 R h) - R sin e.
pub fn slant_range_km(altitude_km: f64, elevation_deg: f64) -> Result<f64, LinkError> {
    let altitude_ok = altitude_km.is_finite() && altitude_km > 0.0;
    let elevation_ok = elevation_deg.is_finite() && elevation_deg > 0.0 && elevation_deg <= 90.0;
    if !altitude_ok || !elevation_ok {
        return Err(LinkError::InvalidGeometry {
            altitude_km,
            elevation_deg,
        });
    }
    let re_sin = EARTH_RADIUS_KM * elevation_deg.to_radians().sin();
    let d = (re_sin * re_sin + altitude_km * altitude_km + 2.0 * EARTH_RADIUS_KM * altitude_km)
        .sqrt()
        - re_sin;
    Ok(d)
}

/// Piecewise-constant RTD over simulation time. Segment starts are strictly
/// increasing and the first segment starts at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RtdSchedule {
    segments: Vec<(TimeMs, TimeMs)>,
}

impl RtdSchedule {
    pub fn new(segments: Vec<(TimeMs, TimeMs)>) -> Result<Self, String> {
        if segments.is_empty() {
            return Err("rtd schedule needs at least one segment".into());
        }
        if segments[0].0 .0 != 0.0 {
            return Err("first rtd segment must start at t = 0".into());
        }
        for pair in segments.windows(2) {
            if pair[1].0 .0 <= pair[0].0 .0 {
                return Err("rtd segment start times must be strictly increasing".into());
            }
        }
        Ok(RtdSchedule { segments })
    }

    /// Single segment with a constant RTD.
    pub fn constant(rtd: TimeMs) -> Self {
        RtdSchedule {
            segments: vec![(TimeMs::ZERO, rtd)],
        }
    }

    pub fn segments(&self) -> &[(TimeMs, TimeMs)] {
        &self.segments
    }

    /// RTD of the last segment with start <= t. A new segment applies at
    /// exactly its start time (right-continuous steps).
    pub fn rtd_at(&self, t: TimeMs) -> TimeMs {
        debug_assert!(t.0 >= 0.0);
        let mut current = self.segments[0].1;
        for &(start, rtd) in &self.segments {
            if start.0 <= t.0 {
                current = rtd;
            } else {
                break;
            }
        }
        current
    }
}
