//! Conversions between Hartree atomic units and the laboratory units used at
//! the command-line boundary (picoseconds, volts per centimetre).
//!
//! All physics in this crate is evaluated in atomic units. Lab units only
//! appear when reading configuration or writing reports.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Atomic unit of electric field (V/cm). CODATA 2018: 5.142 206 747 63(78) e11 V/m.
pub const FIELD_AU_IN_V_PER_CM: f64 = 5.142206747e9;

/// Atomic unit of time (s). CODATA 2018: 2.418 884 326 5857(47) e-17 s.
pub const TIME_AU_IN_SECONDS: f64 = 2.418884327e-17;

/// A pair of conversion factors. `UnitSystem::CODATA` is the only table used
/// by the library; other instances exist so that checks can be run against a
/// deliberately corrupted table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub field_v_per_cm: f64,
    pub time_seconds: f64,
}

impl UnitSystem {
    pub const CODATA: UnitSystem = UnitSystem {
        field_v_per_cm: FIELD_AU_IN_V_PER_CM,
        time_seconds: TIME_AU_IN_SECONDS,
    };

    pub fn time_ps(&self, t: TimeAu) -> f64 {
        t.0 * self.time_seconds * 1e12
    }

    pub fn time_from_ps(&self, ps: f64) -> Result<TimeAu> {
        TimeAu::new(ps / (self.time_seconds * 1e12))
    }

    pub fn field_from_volts_per_cm(&self, v_per_cm: f64) -> Result<FieldStrength> {
        if !v_per_cm.is_finite() || v_per_cm <= 0.0 {
            return Err(Error::Domain(format!(
                "field strength must be positive and finite, got {v_per_cm} V/cm"
            )));
        }
        FieldStrength::from_au(v_per_cm / self.field_v_per_cm)
    }

    pub fn field_volts_per_cm(&self, f: FieldStrength) -> f64 {
        f.0 * self.field_v_per_cm
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Static electric field magnitude in atomic units. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct FieldStrength(f64);

impl FieldStrength {
    pub fn from_au(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Domain(format!(
                "field strength must be positive and finite, got {value} au"
            )));
        }
        Ok(FieldStrength(value))
    }

    pub fn au(self) -> f64 {
        self.0
    }

    pub fn volts_per_cm(self) -> f64 {
        UnitSystem::CODATA.field_volts_per_cm(self)
    }
}

impl fmt::Display for FieldStrength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} au ({:.2} V/cm)", self.0, self.volts_per_cm())
    }
}

/// A time (or duration) in atomic units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct TimeAu(f64);

impl TimeAu {
    pub const ZERO: TimeAu = TimeAu(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Domain(format!("time must be finite, got {value}")));
        }
        Ok(TimeAu(value))
    }

    pub fn from_ps(ps: f64) -> Result<Self> {
        UnitSystem::CODATA.time_from_ps(ps)
    }

    pub fn au(self) -> f64 {
        self.0
    }

    pub fn ps(self) -> f64 {
        time_to_ps(self)
    }

    /// Internal constructor for values derived from already-finite inputs.
    pub(crate) fn raw(value: f64) -> Self {
        debug_assert!(value.is_finite());
        TimeAu(value)
    }
}

impl fmt::Display for TimeAu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} au ({:.4} ps)", self.0, self.ps())
    }
}

pub fn field_from_volts_per_cm(v_per_cm: f64) -> Result<FieldStrength> {
    UnitSystem::CODATA.field_from_volts_per_cm(v_per_cm)
}

pub fn time_to_ps(t: TimeAu) -> f64 {
    UnitSystem::CODATA.time_ps(t)
}
