//! Gaussian coupling-pulse shapes and the memory / transduction schedules.
//!
//! All times are in units of 1/omega_m and all rates in units of omega_m.
//! A pulse `Omega(t) = Omega exp(-(t - t_c)^2 / (w^2 pi))` has signed area
//! `w pi Omega`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

use std::f64::consts::PI;

/// Coupling channels of the three-resonator system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Microwave <-> mechanical coupling (Omega_mu).
    ElectroMechanical,
    /// Optical <-> mechanical coupling (Omega_o).
    OptoMechanical,
}

/// A single Gaussian coupling pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// Signed peak coupling (units omega_m).
    pub peak: f64,
    /// Center time (units 1/omega_m).
    pub center: f64,
    /// Width parameter w; the 1/e half-width is w sqrt(pi).
    pub width: f64,
    pub channel: Channel,
}

/// Pulse value at relative amplitude 1e-6 of the peak; schedules are sized so
/// tails below this level fall outside.
const TAIL_LEVEL: f64 = 1e-6;

impl Pulse {
    pub fn value(&self, t: f64) -> f64 {
        let u = t - self.center;
        self.peak * (-u * u / (self.width * self.width * PI)).exp()
    }

    /// Signed area w pi Omega.
    pub fn area(&self) -> f64 {
        self.width * PI * self.peak
    }

    /// Offset from the center at which the pulse drops to 1e-6 of its peak.
    pub fn tail_offset(&self) -> f64 {
        self.width * (PI * (1.0 / TAIL_LEVEL).ln()).sqrt()
    }
}

/// A list of coupling pulses with explicit schedule bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub pulses: Vec<Pulse>,
    pub t_start: f64,
    pub t_end: f64,
}

impl PulseSchedule {
    pub fn new(pulses: Vec<Pulse>, t_start: f64, t_end: f64) -> Result<Self> {
        let s = Self {
            pulses,
            t_start,
            t_end,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t_start) {
            return Err(SimError::Schedule(format!(
                "empty time window [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        for p in &self.pulses {
            if !(p.width > 0.0) {
                return Err(SimError::Schedule(format!("pulse width {} <= 0", p.width)));
            }
            if p.center < self.t_start || p.center > self.t_end {
                return Err(SimError::Schedule(format!(
                    "pulse center {} outside [{}, {}]",
                    p.center, self.t_start, self.t_end
                )));
            }
            let edge = p.value(self.t_start).abs().max(p.value(self.t_end).abs());
            if edge > TAIL_LEVEL * p.peak.abs() * (1.0 + 1e-12) {
                return Err(SimError::Schedule(format!(
                    "schedule too short to contain the tails of the pulse at t_c = {}",
                    p.center
                )));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Sum of the channel's Gaussian profiles at `t`.
    pub fn coupling_at(&self, channel: Channel, t: f64) -> Result<f64> {
        if t < self.t_start - 1e-12 || t > self.t_end + 1e-12 {
            return Err(SimError::OutsideSchedule {
                t,
                t_start: self.t_start,
                t_end: self.t_end,
            });
        }
        Ok(self.coupling_unchecked(channel, t))
    }

    pub(crate) fn coupling_unchecked(&self, channel: Channel, t: f64) -> f64 {
        self.pulses
            .iter()
            .filter(|p| p.channel == channel)
            .map(|p| p.value(t))
            .sum()
    }

    pub fn has_channel(&self, channel: Channel) -> bool {
        self.pulses.iter().any(|p| p.channel == channel)
    }

    /// Largest instantaneous |coupling| over both channels, by peak bound.
    pub fn max_coupling(&self) -> f64 {
        // Conservative bound: sum of peak magnitudes.
        self.pulses.iter().map(|p| p.peak.abs()).sum()
    }
}

/// Storage/retrieval sequence: a +pi electromechanical pulse, a wait of
/// `delta_t` between pulse centers, then a -pi pulse. The retrieval sign is
/// flipped to cancel the phase accumulated during the swaps.
pub fn memory_schedule(omega_peak: f64, delta_t: f64) -> Result<PulseSchedule> {
    if !(omega_peak > 0.0) {
        return Err(SimError::Schedule(format!(
            "peak coupling {omega_peak} must be positive"
        )));
    }
    if delta_t < 0.0 {
        return Err(SimError::Schedule(format!("negative wait time {delta_t}")));
    }
    // Area pi: w pi Omega = pi.
    let width = 1.0 / omega_peak;
    let tail = width * (PI * (1.0 / TAIL_LEVEL).ln()).sqrt();
    let store = Pulse {
        peak: omega_peak,
        center: tail,
        width,
        channel: Channel::ElectroMechanical,
    };
    let retrieve = Pulse {
        peak: -omega_peak,
        center: tail + delta_t,
        width,
        channel: Channel::ElectroMechanical,
    };
    PulseSchedule::new(vec![store, retrieve], 0.0, tail + delta_t + tail)
}

/// Transduction pulse orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransductionKind {
    /// Two non-overlapping pi pulses; `area_pi` is ignored (pi each).
    Separated,
    /// Both pulses coincide; area forced to sqrt(2) pi.
    Simultaneous,
    /// Area and separation as given.
    Overlapping,
}

/// Maximum |separation| as a percentage of the sequence time.
const MAX_SEPARATION_PCT: f64 = 80.0;

/// Build a transduction schedule. `area_pi` is the unsigned pulse area in
/// multiples of pi and `separation_pct` the center-to-center distance as a
/// percentage of the total sequence time: positive values put the
/// electromechanical pulse first (intuitive ordering), negative values the
/// optomechanical pulse first (counter-intuitive, STIRAP-like ordering).
///
/// The sequence time is `t_end - t_start`, with the bounds placed four
/// Gaussian 1/e half-widths beyond the outer pulse centers. The
/// optomechanical pulse carries the opposite sign from the electromechanical
/// one, cancelling the swap phase exactly as in the memory sequence.
pub fn transduction_schedule(
    kind: TransductionKind,
    area_pi: f64,
    separation_pct: f64,
    omega_peak: f64,
) -> Result<PulseSchedule> {
    if !(omega_peak > 0.0) {
        return Err(SimError::Schedule(format!(
            "peak coupling {omega_peak} must be positive"
        )));
    }
    let (area_pi, separation_pct) = match kind {
        TransductionKind::Separated => (1.0, separation_pct),
        TransductionKind::Simultaneous => (std::f64::consts::SQRT_2, 0.0),
        TransductionKind::Overlapping => (area_pi, separation_pct),
    };
    if !(area_pi > 0.0) {
        return Err(SimError::Schedule(format!(
            "pulse area {area_pi} pi must be positive"
        )));
    }
    if separation_pct.abs() > MAX_SEPARATION_PCT {
        return Err(SimError::Schedule(format!(
            "|separation| {separation_pct}% too large for the pulse tails to fit \
             (limit {MAX_SEPARATION_PCT}%)"
        )));
    }
    // w pi Omega = area_pi * pi.
    let width = area_pi / omega_peak;
    let half_width = width * PI.sqrt();
    // T = separation + 8 half-widths, separation = |pct|/100 * T.
    let total = 8.0 * half_width / (1.0 - separation_pct.abs() / 100.0);
    let sep = separation_pct / 100.0 * total;
    let mid = total / 2.0;
    let em = Pulse {
        peak: omega_peak,
        center: mid - sep / 2.0,
        width,
        channel: Channel::ElectroMechanical,
    };
    let om = Pulse {
        peak: -omega_peak,
        center: mid + sep / 2.0,
        width,
        channel: Channel::OptoMechanical,
    };
    PulseSchedule::new(vec![em, om], 0.0, total)
}
