//! Per-variable daily weather series with gap policies.
//!
//! Precipitation is event-like: a missing day means no rain, so gaps become
//! zeros — interpolating would fabricate water and break conservation checks.
//! Temperatures, reference evapotranspiration, and relative humidity vary
//! smoothly and are linearly interpolated across interior gaps, holding the
//! boundary value outside the record span.

use super::{WeatherRecord, WeatherStream};
use crate::align::{resample_series, AlignError, AlignmentPolicy, Extrapolation, Interp};
use crate::geometry::Crs;
use crate::units::Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeatherVar {
    Precip,
    Et0,
    Tmax,
    Tmin,
    Rh,
}

pub const ALL_WEATHER_VARS: [WeatherVar; 5] = [
    WeatherVar::Precip,
    WeatherVar::Et0,
    WeatherVar::Tmax,
    WeatherVar::Tmin,
    WeatherVar::Rh,
];

impl WeatherVar {
    pub fn key(&self) -> &'static str {
        match self {
            WeatherVar::Precip => "precip_mm",
            WeatherVar::Et0 => "et0_mm",
            WeatherVar::Tmax => "tmax_degC",
            WeatherVar::Tmin => "tmin_degC",
            WeatherVar::Rh => "rh_pct",
        }
    }

    pub fn parse(key: &str) -> Option<WeatherVar> {
        ALL_WEATHER_VARS.iter().copied().find(|v| v.key() == key)
    }

    pub fn unit(&self) -> Unit {
        match self {
            WeatherVar::Precip | WeatherVar::Et0 => Unit::Millimeter,
            WeatherVar::Tmax | WeatherVar::Tmin => Unit::DegC,
            // Relative humidity is a percentage; it carries no base dimension.
            WeatherVar::Rh => Unit::Dimensionless,
        }
    }

    fn pick(&self, r: &WeatherRecord) -> f64 {
        match self {
            WeatherVar::Precip => r.precip_mm,
            WeatherVar::Et0 => r.et0_mm,
            WeatherVar::Tmax => r.tmax_degc,
            WeatherVar::Tmin => r.tmin_degc,
            WeatherVar::Rh => r.rh_pct,
        }
    }
}

impl WeatherStream {
    /// Daily values of one variable over an inclusive day range.
    pub fn daily(&self, var: WeatherVar, range: (i64, i64)) -> Result<Vec<(i64, f64)>, AlignError> {
        let samples: Vec<(i64, f64)> = self.records.iter().map(|r| (r.t, var.pick(r))).collect();
        match var {
            WeatherVar::Precip => {
                if samples.is_empty() {
                    return Err(AlignError::EmptySeries);
                }
                let mut out = Vec::with_capacity((range.1 - range.0 + 1).max(0) as usize);
                let mut idx = 0usize;
                for t in range.0..=range.1 {
                    while idx < samples.len() && samples[idx].0 < t {
                        idx += 1;
                    }
                    let v = if idx < samples.len() && samples[idx].0 == t { samples[idx].1 } else { 0.0 };
                    out.push((t, v));
                }
                Ok(out)
            }
            _ => {
                // Target CRS is irrelevant for a pure temporal resample.
                let policy = AlignmentPolicy::new(Crs::Geo, Interp::Linear, Extrapolation::Hold);
                resample_series(&samples, &policy, range)
            }
        }
    }
}
