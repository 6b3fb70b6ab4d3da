//! Dimension-checked physical quantities.
//!
//! Units carry an exponent vector over five base dimensions. Area is its own
//! base dimension rather than length², so per-area rates (kg/ha) can never be
//! silently added to plain masses, and mm of water never coerces into kg.
//! Conversion factors between symbols of equal dimension are fixed positive
//! rationals, so factor composition along any path through the conversion
//! graph is exact.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Exponents over the base dimensions (mass, length, time, temperature, area).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dim {
    pub mass: i8,
    pub length: i8,
    pub time: i8,
    pub temperature: i8,
    pub area: i8,
}

impl Dim {
    pub const DIMENSIONLESS: Dim = Dim::new(0, 0, 0, 0, 0);

    pub const fn new(mass: i8, length: i8, time: i8, temperature: i8, area: i8) -> Dim {
        Dim { mass, length, time, temperature, area }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M^{} L^{} T^{} Θ^{} A^{}",
            self.mass, self.length, self.time, self.temperature, self.area
        )
    }
}

/// The closed set of unit symbols understood by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "g")]
    Gram,
    #[serde(rename = "kg")]
    Kilogram,
    #[serde(rename = "t")]
    Tonne,
    #[serde(rename = "mm")]
    Millimeter,
    #[serde(rename = "m")]
    Meter,
    #[serde(rename = "day")]
    Day,
    #[serde(rename = "hour")]
    Hour,
    #[serde(rename = "degC")]
    DegC,
    #[serde(rename = "degC_day")]
    DegCDay,
    #[serde(rename = "kg_per_ha")]
    KgPerHa,
    #[serde(rename = "mm_per_day")]
    MmPerDay,
    #[serde(rename = "dimensionless")]
    Dimensionless,
}

pub const ALL_UNITS: [Unit; 12] = [
    Unit::Gram,
    Unit::Kilogram,
    Unit::Tonne,
    Unit::Millimeter,
    Unit::Meter,
    Unit::Day,
    Unit::Hour,
    Unit::DegC,
    Unit::DegCDay,
    Unit::KgPerHa,
    Unit::MmPerDay,
    Unit::Dimensionless,
];

impl Unit {
    pub fn symbol(&self) -> &'static str {
        match self {
            Unit::Gram => "g",
            Unit::Kilogram => "kg",
            Unit::Tonne => "t",
            Unit::Millimeter => "mm",
            Unit::Meter => "m",
            Unit::Day => "day",
            Unit::Hour => "hour",
            Unit::DegC => "degC",
            Unit::DegCDay => "degC_day",
            Unit::KgPerHa => "kg_per_ha",
            Unit::MmPerDay => "mm_per_day",
            Unit::Dimensionless => "dimensionless",
        }
    }

    pub fn parse(symbol: &str) -> Result<Unit, UnitsError> {
        ALL_UNITS
            .iter()
            .copied()
            .find(|u| u.symbol() == symbol)
            .ok_or_else(|| UnitsError::UnknownSymbol(symbol.to_string()))
    }

    pub fn dim(&self) -> Dim {
        match self {
            Unit::Gram | Unit::Kilogram | Unit::Tonne => Dim::new(1, 0, 0, 0, 0),
            Unit::Millimeter | Unit::Meter => Dim::new(0, 1, 0, 0, 0),
            Unit::Day | Unit::Hour => Dim::new(0, 0, 1, 0, 0),
            Unit::DegC => Dim::new(0, 0, 0, 1, 0),
            Unit::DegCDay => Dim::new(0, 0, 1, 1, 0),
            Unit::KgPerHa => Dim::new(1, 0, 0, 0, -1),
            Unit::MmPerDay => Dim::new(0, 1, -1, 0, 0),
            Unit::Dimensionless => Dim::DIMENSIONLESS,
        }
    }

    /// Scale to the dimension's base unit, as an exact rational (num, den).
    /// `value_in_base = value * num / den`.
    fn base_scale(&self) -> (u64, u64) {
        match self {
            Unit::Gram => (1, 1000),
            Unit::Kilogram => (1, 1),
            Unit::Tonne => (1000, 1),
            Unit::Millimeter => (1, 1000),
            Unit::Meter => (1, 1),
            Unit::Day => (1, 1),
            Unit::Hour => (1, 24),
            Unit::DegC
            | Unit::DegCDay
            | Unit::KgPerHa
            | Unit::MmPerDay
            | Unit::Dimensionless => (1, 1),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitsError {
    #[error("dimension mismatch: cannot convert {from} ({from_dim}) to {to} ({to_dim})")]
    DimensionMismatch { from: Unit, from_dim: Dim, to: Unit, to_dim: Dim },
    #[error("unknown unit symbol {0:?}")]
    UnknownSymbol(String),
    #[error("quantity value must be finite, got {0}")]
    NonFinite(f64),
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Exact conversion factor between two units of equal dimension, as a reduced
/// rational `(num, den)` such that `value_to = value_from * num / den`.
pub fn factor_rational(from: Unit, to: Unit) -> Result<(u64, u64), UnitsError> {
    if from.dim() != to.dim() {
        return Err(UnitsError::DimensionMismatch {
            from,
            from_dim: from.dim(),
            to,
            to_dim: to.dim(),
        });
    }
    let (fn_, fd) = from.base_scale();
    let (tn, td) = to.base_scale();
    // from→base is fn/fd, base→to is td/tn.
    let num = fn_ as u128 * td as u128;
    let den = fd as u128 * tn as u128;
    let g = gcd(num, den);
    Ok(((num / g) as u64, (den / g) as u64))
}

/// Conversion factor as a float (exact rational evaluated once).
pub fn factor(from: Unit, to: Unit) -> Result<f64, UnitsError> {
    let (n, d) = factor_rational(from, to)?;
    Ok(n as f64 / d as f64)
}

/// A finite real value tagged with a unit symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Result<Quantity, UnitsError> {
        if !value.is_finite() {
            return Err(UnitsError::NonFinite(value));
        }
        Ok(Quantity { value, unit })
    }

    pub fn dim(&self) -> Dim {
        self.unit.dim()
    }

    /// Convert to another unit of the same dimension.
    pub fn convert(&self, target: Unit) -> Result<Quantity, UnitsError> {
        let (n, d) = factor_rational(self.unit, target)?;
        Ok(Quantity { value: self.value * n as f64 / d as f64, unit: target })
    }

    /// Add another quantity, converting it to this quantity's unit first.
    pub fn add(&self, other: &Quantity) -> Result<Quantity, UnitsError> {
        let rhs = other.convert(self.unit)?;
        Quantity::new(self.value + rhs.value, self.unit)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}
