//! Run configuration: a small TOML file (plus command-line overrides) that is
//! resolved into fully explicit atomic-unit parameters.
//!
//! ```toml
//! nbar = 24
//! classical_ratio = "2/13"     # or revival_ratio = "1/12", or field = "794.8V/cm"
//! phase_model = "taylor2"
//!
//! [packet]
//! n_list = [23, 24, 25]
//! k_sigma = 6.0
//! truncation = { kind = "half_manifold" }
//!
//! [grid]
//! t_max = "150ps"
//! dt = "0.04ps"                # optional, defaults to T_cl^(n)/50
//!
//! [output]
//! path = "out/fig1"
//! format = "csv"
//! ```
//!
//! The resolved form replaces every default by its value and every lab-unit
//! quantity by atomic units, so feeding it back reproduces the run exactly.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::PhaseKind;
use crate::error::{Error, Result};
use crate::packet::{NWeighting, PacketSpec, Truncation};
use crate::stark::{
    ensure_below_threshold, solve_field_for_classical_ratio, solve_field_for_revival_ratio, time_scales, Ratio,
    TimeScales,
};
use crate::units::{FieldStrength, TimeAu, UnitSystem};

/// Default grid step as a fraction of `T_cl^(n)`.
pub const DEFAULT_STEPS_PER_KEPLER_PERIOD: f64 = 50.0;

/// Shortest decimal text that parses back to the same `f64`.
fn fmt_f64(x: f64) -> String {
    if x != 0.0 && !(1e-3..1e6).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn split_number(s: &str) -> Result<(f64, &str)> {
    let s = s.trim();
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-' || ((c == 'e' || c == 'E') && i > 0))
        })
        .map_or(s.len(), |(i, _)| i);
    let value = s[..end]
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("expected a number followed by a unit, got {s:?}")))?;
    Ok((value, s[end..].trim()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldUnit {
    Au,
    VoltsPerCm,
}

/// A field strength with its unit, written `"968.7V/cm"` or `"1.2559e-7au"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FieldInput {
    pub value: f64,
    pub unit: FieldUnit,
}

impl FieldInput {
    pub fn to_field(self, units: &UnitSystem) -> Result<FieldStrength> {
        match self.unit {
            FieldUnit::Au => FieldStrength::from_au(self.value),
            FieldUnit::VoltsPerCm => units.field_from_volts_per_cm(self.value),
        }
    }
}

impl FromStr for FieldInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (value, unit) = split_number(s)?;
        let unit = match unit.to_ascii_lowercase().as_str() {
            "au" | "a.u." => FieldUnit::Au,
            "v/cm" => FieldUnit::VoltsPerCm,
            other => return Err(Error::Config(format!("unknown field unit {other:?} in {s:?} (au or V/cm)"))),
        };
        Ok(FieldInput { value, unit })
    }
}

impl fmt::Display for FieldInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = match self.unit {
            FieldUnit::Au => "au",
            FieldUnit::VoltsPerCm => "V/cm",
        };
        write!(f, "{}{}", fmt_f64(self.value), unit)
    }
}

impl TryFrom<String> for FieldInput {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FieldInput> for String {
    fn from(x: FieldInput) -> String {
        x.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Au,
    Ps,
}

/// A time with its unit, written `"150ps"` or `"6.2e6au"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimeInput {
    pub value: f64,
    pub unit: TimeUnit,
}

impl TimeInput {
    pub fn au(value: f64) -> Self {
        TimeInput { value, unit: TimeUnit::Au }
    }

    pub fn to_time(self, units: &UnitSystem) -> Result<TimeAu> {
        match self.unit {
            TimeUnit::Au => TimeAu::new(self.value),
            TimeUnit::Ps => units.time_from_ps(self.value),
        }
    }
}

impl FromStr for TimeInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (value, unit) = split_number(s)?;
        let unit = match unit.to_ascii_lowercase().as_str() {
            "au" | "a.u." => TimeUnit::Au,
            "ps" => TimeUnit::Ps,
            other => return Err(Error::Config(format!("unknown time unit {other:?} in {s:?} (au or ps)"))),
        };
        Ok(TimeInput { value, unit })
    }
}

impl fmt::Display for TimeInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = match self.unit {
            TimeUnit::Au => "au",
            TimeUnit::Ps => "ps",
        };
        write!(f, "{}{}", fmt_f64(self.value), unit)
    }
}

impl TryFrom<String> for TimeInput {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TimeInput> for String {
    fn from(x: TimeInput) -> String {
        x.to_string()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format {s:?} (csv|json)"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kbar: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_weighting: Option<NWeighting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_start: Option<TimeInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<TimeInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<TimeInput>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

/// Configuration as written by a user; every field may be missing until
/// [`RunConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical_ratio: Option<Ratio>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revival_ratio: Option<Ratio>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_model: Option<PhaseKind>,
    #[serde(default)]
    pub packet: PacketConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("serializing configuration: {e}")))
    }

    /// Sets the field source, clearing the other two.
    pub fn set_field(&mut self, field: FieldInput) {
        *self = RunConfig { field: Some(field), classical_ratio: None, revival_ratio: None, ..self.clone() };
    }

    pub fn set_classical_ratio(&mut self, ratio: Ratio) {
        *self = RunConfig { field: None, classical_ratio: Some(ratio), revival_ratio: None, ..self.clone() };
    }

    pub fn set_revival_ratio(&mut self, ratio: Ratio) {
        *self = RunConfig { field: None, classical_ratio: None, revival_ratio: Some(ratio), ..self.clone() };
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        self.resolve_with(&UnitSystem::CODATA)
    }

    /// Applies defaults, converts to atomic units and refuses fields at or
    /// above the ionization threshold.
    pub fn resolve_with(&self, units: &UnitSystem) -> Result<ResolvedConfig> {
        let nbar = self.nbar.ok_or_else(|| Error::Config("nbar is required".into()))?;
        if nbar < 2 {
            return Err(Error::Config(format!("nbar must be >= 2, got {nbar}")));
        }
        let sources =
            [self.field.is_some(), self.classical_ratio.is_some(), self.revival_ratio.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(Error::Config(
                "exactly one of field, classical_ratio, revival_ratio must be given".into(),
            ));
        }
        let (field, source) = if let Some(f) = self.field {
            let field = f.to_field(units)?;
            ensure_below_threshold(nbar, field)?;
            (field, format!("field {f}"))
        } else if let Some(r) = self.classical_ratio {
            (solve_field_for_classical_ratio(nbar, r)?, format!("classical_ratio {r}"))
        } else {
            let r = self.revival_ratio.expect("one source is set");
            (solve_field_for_revival_ratio(nbar, r)?, format!("revival_ratio {r}"))
        };
        let ts = time_scales(nbar, field)?;

        let p = &self.packet;
        let packet = PacketSpec {
            nbar,
            kbar: p.kbar.unwrap_or(0),
            n_list: p.n_list.clone().unwrap_or_else(|| vec![nbar - 1, nbar, nbar + 1]),
            n_weighting: p.n_weighting.unwrap_or(NWeighting::FlatTop),
            k_sigma: p.k_sigma.unwrap_or(6.0),
            truncation: p.truncation.unwrap_or(Truncation::HalfManifold),
            field,
        };
        packet.validate()?;

        let grid = match self.grid.t_max {
            None => None,
            Some(t_max) => {
                let t_start = self.grid.t_start.map_or(Ok(TimeAu::ZERO), |t| t.to_time(units))?;
                let dt = match self.grid.dt {
                    Some(dt) => dt.to_time(units)?,
                    None => TimeAu::new(ts.t_cl_n.au() / DEFAULT_STEPS_PER_KEPLER_PERIOD)?,
                };
                Some(ResolvedGrid { t_start, t_max: t_max.to_time(units)?, dt })
            }
        };

        Ok(ResolvedConfig {
            nbar,
            field,
            field_source: source,
            phase_model: self.phase_model.unwrap_or(PhaseKind::Taylor2),
            packet,
            grid,
            output_path: self.output.path.clone(),
            format: self.output.format.unwrap_or_default(),
            time_scales: ts,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedGrid {
    pub t_start: TimeAu,
    pub t_max: TimeAu,
    pub dt: TimeAu,
}

/// Fully explicit run parameters in atomic units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub nbar: u32,
    pub field: FieldStrength,
    /// How the field was specified before resolution.
    pub field_source: String,
    pub phase_model: PhaseKind,
    #[serde(serialize_with = "ser_packet")]
    pub packet: PacketSpec,
    pub grid: Option<ResolvedGrid>,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub time_scales: TimeScales,
}

fn ser_packet<S: serde::Serializer>(p: &PacketSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
    packet_config(p).serialize(s)
}

fn packet_config(p: &PacketSpec) -> PacketConfig {
    PacketConfig {
        n_list: Some(p.n_list.clone()),
        kbar: Some(p.kbar),
        k_sigma: Some(p.k_sigma),
        n_weighting: Some(p.n_weighting),
        truncation: Some(p.truncation),
    }
}

impl ResolvedConfig {
    /// Equivalent input configuration with no defaults left and every
    /// quantity in atomic units.
    pub fn to_run_config(&self) -> RunConfig {
        RunConfig {
            nbar: Some(self.nbar),
            field: Some(FieldInput { value: self.field.au(), unit: FieldUnit::Au }),
            classical_ratio: None,
            revival_ratio: None,
            phase_model: Some(self.phase_model),
            packet: packet_config(&self.packet),
            grid: self.grid.map_or_else(GridConfig::default, |g| GridConfig {
                t_start: Some(TimeInput::au(g.t_start.au())),
                t_max: Some(TimeInput::au(g.t_max.au())),
                dt: Some(TimeInput::au(g.dt.au())),
            }),
            output: OutputConfig { path: self.output_path.clone(), format: Some(self.format) },
        }
    }

    pub fn require_grid(&self) -> Result<ResolvedGrid> {
        self.grid.ok_or_else(|| Error::Config("grid.t_max is required for this command".into()))
    }
}
