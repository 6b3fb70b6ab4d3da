//! The typed state space: five entity families plus the immutable world
//! container.
//!
//! A [`WorldState`] is a validated snapshot. Every tool in the engine reads it
//! through a shared reference and nothing mutates it after load, so snapshots
//! are safe to share across threads and a whole benchmark run leaves the
//! on-disk bundle byte-identical.

mod bundle;
pub mod weather;

pub use bundle::{load_world, save_world};
pub use weather::WeatherVar;

use crate::geometry::{Crs, GeometryError, Polygon};
use crate::units::{Quantity, Unit};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("malformed bundle: {0}")]
    BundleFormat(String),
    #[error("invariant violated for {entity} {id}: {message}")]
    Invariant { entity: &'static str, id: String, message: String },
    #[error("I/O error at {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl WorldError {
    fn invariant(entity: &'static str, id: impl Into<String>, message: impl Into<String>) -> WorldError {
        WorldError::Invariant { entity, id: id.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CropType {
    Maize,
    Wheat,
    Soy,
    Rice,
}

pub const ALL_CROPS: [CropType; 4] = [CropType::Maize, CropType::Wheat, CropType::Soy, CropType::Rice];

impl CropType {
    pub fn name(&self) -> &'static str {
        match self {
            CropType::Maize => "maize",
            CropType::Wheat => "wheat",
            CropType::Soy => "soy",
            CropType::Rice => "rice",
        }
    }

    pub fn parse(s: &str) -> Option<CropType> {
        ALL_CROPS.iter().copied().find(|c| c.name() == s)
    }
}

/// A field parcel (or a crop-free sensor footprint) with polygon geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parcel {
    pub id: String,
    pub geometry: Polygon,
    /// `None` marks footprint-style geometries that carry no crop.
    pub crop_type: Option<CropType>,
    pub region_id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, Quantity>,
}

/// Remote-sensing style raster stack: per-band 3D value arrays plus a 0/1
/// validity mask, all on `[time][row][col]` with row 0 at the grid origin
/// (origin is the minimum corner; rows grow along +y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterTimeSeries {
    pub id: String,
    pub crs: Crs,
    pub origin: [f64; 2],
    pub pixel_size: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub timestamps: Vec<i64>,
    /// Band name → flattened `[time][row][col]` values.
    pub bands: BTreeMap<String, Vec<f64>>,
    pub mask: Vec<u8>,
    /// Band name → unit symbol.
    pub units: BTreeMap<String, Unit>,
}

impl RasterTimeSeries {
    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, t_idx: usize, row: usize, col: usize) -> usize {
        (t_idx * self.height + row) * self.width + col
    }

    pub fn pixel_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.pixel_size[0],
            self.origin[1] + (row as f64 + 0.5) * self.pixel_size[1],
        ]
    }

    pub fn time_index(&self, t: i64) -> Option<usize> {
        self.timestamps.binary_search(&t).ok()
    }

    pub fn time_bounds(&self) -> (i64, i64) {
        (self.timestamps[0], self.timestamps[self.timestamps.len() - 1])
    }

    fn validate(&self) -> Result<(), WorldError> {
        let inv = |m: String| WorldError::invariant("raster", &self.id, m);
        if self.width == 0 || self.height == 0 {
            return Err(inv("width and height must be positive".into()));
        }
        if self.pixel_size[0] <= 0.0 || self.pixel_size[1] <= 0.0 {
            return Err(inv("pixel_size must be positive".into()));
        }
        if self.timestamps.is_empty() {
            return Err(inv("timestamps must be non-empty".into()));
        }
        if self.timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(inv("timestamps must be strictly increasing".into()));
        }
        let expect = self.timestamps.len() * self.cell_count();
        for (band, values) in &self.bands {
            if values.len() != expect {
                return Err(inv(format!(
                    "band {band} has {} values, expected {expect}",
                    values.len()
                )));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(inv(format!("band {band} contains non-finite value {v}")));
            }
            if !self.units.contains_key(band) {
                return Err(inv(format!("band {band} has no unit")));
            }
        }
        if self.mask.len() != expect {
            return Err(inv(format!("mask has {} entries, expected {expect}", self.mask.len())));
        }
        if self.mask.iter().any(|m| *m > 1) {
            return Err(inv("mask entries must be 0 or 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridLayer {
    SoilWaterCapacity,
    Elevation,
    ClayFraction,
}

/// Static spatial layer on a regular grid (same cell layout rules as rasters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub id: String,
    pub crs: Crs,
    pub origin: [f64; 2],
    pub pixel_size: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub unit: Unit,
    pub name: GridLayer,
}

impl GridField {
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.pixel_size[0],
            self.origin[1] + (row as f64 + 0.5) * self.pixel_size[1],
        ]
    }

    fn validate(&self) -> Result<(), WorldError> {
        let inv = |m: String| WorldError::invariant("grid", &self.id, m);
        if self.values.len() != self.width * self.height {
            return Err(inv(format!(
                "values length {} does not match {}x{}",
                self.values.len(),
                self.width,
                self.height
            )));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(inv(format!("contains non-finite value {v}")));
        }
        if self.name == GridLayer::SoilWaterCapacity {
            if self.unit != Unit::Millimeter {
                return Err(inv("soil_water_capacity must be in mm".into()));
            }
            if let Some(v) = self.values.iter().find(|v| **v <= 0.0) {
                return Err(inv(format!("soil_water_capacity must be positive, found {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub t: i64,
    pub precip_mm: f64,
    pub et0_mm: f64,
    #[serde(rename = "tmax_degC")]
    pub tmax_degc: f64,
    #[serde(rename = "tmin_degC")]
    pub tmin_degc: f64,
    pub rh_pct: f64,
}

/// Daily exogenous drivers for one region. Records may have gaps; readers
/// resample onto the daily grid with per-variable policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherStream {
    pub id: String,
    pub region_id: String,
    pub records: Vec<WeatherRecord>,
}

impl WeatherStream {
    pub fn time_bounds(&self) -> (i64, i64) {
        (self.records[0].t, self.records[self.records.len() - 1].t)
    }

    fn validate(&self) -> Result<(), WorldError> {
        let inv = |m: String| WorldError::invariant("weather", &self.id, m);
        if self.records.is_empty() {
            return Err(inv("must contain at least one record".into()));
        }
        if self.records.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(inv("record times must be strictly increasing".into()));
        }
        for r in &self.records {
            if r.tmax_degc < r.tmin_degc {
                return Err(inv(format!("tmax {} < tmin {} at t={}", r.tmax_degc, r.tmin_degc, r.t)));
            }
            if r.precip_mm < 0.0 || r.et0_mm < 0.0 {
                return Err(inv(format!("precip/et0 must be non-negative at t={}", r.t)));
            }
            if !(0.0..=100.0).contains(&r.rh_pct) {
                return Err(inv(format!("rh {} out of [0,100] at t={}", r.rh_pct, r.t)));
            }
            for v in [r.precip_mm, r.et0_mm, r.tmax_degc, r.tmin_degc, r.rh_pct] {
                if !v.is_finite() {
                    return Err(inv(format!("non-finite value at t={}", r.t)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManagementAction {
    Irrigate,
    Fertilize,
    Sow,
    Harvest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagementEvent {
    pub t: i64,
    pub action: ManagementAction,
    pub q: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagementLog {
    pub parcel_id: String,
    pub events: Vec<ManagementEvent>,
}

/// Immutable snapshot of one world: all entities keyed by id, plus the season
/// horizon as inclusive day indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub world_id: String,
    pub season: [i64; 2],
    pub parcels: BTreeMap<String, Parcel>,
    pub rasters: BTreeMap<String, RasterTimeSeries>,
    pub grids: BTreeMap<String, GridField>,
    pub weather: BTreeMap<String, WeatherStream>,
    /// Keyed by parcel id.
    pub logs: BTreeMap<String, ManagementLog>,
}

impl WorldState {
    pub fn season_days(&self) -> i64 {
        self.season[1] - self.season[0] + 1
    }

    /// Region vocabulary: every region named by a parcel or weather stream.
    pub fn regions(&self) -> Vec<String> {
        let mut set: Vec<String> = self
            .parcels
            .values()
            .map(|p| p.region_id.clone())
            .chain(self.weather.values().map(|w| w.region_id.clone()))
            .collect();
        set.sort();
        set.dedup();
        set
    }

    pub fn weather_for_region(&self, region_id: &str) -> Option<&WeatherStream> {
        self.weather.values().find(|w| w.region_id == region_id)
    }

    /// Check every entity and cross-reference invariant. Called on load and
    /// before save.
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.season[0] > self.season[1] {
            return Err(WorldError::invariant("world", &self.world_id, "season start after end"));
        }
        for (key, parcel) in &self.parcels {
            if key != &parcel.id {
                return Err(WorldError::invariant("parcel", key, "map key differs from parcel id"));
            }
            validate_geometry("parcel", &parcel.id, &parcel.geometry)?;
            if self.weather_for_region(&parcel.region_id).is_none() {
                return Err(WorldError::invariant(
                    "parcel",
                    &parcel.id,
                    format!("region_id {:?} has no weather stream", parcel.region_id),
                ));
            }
        }
        for raster in self.rasters.values() {
            raster.validate()?;
        }
        for grid in self.grids.values() {
            grid.validate()?;
        }
        for stream in self.weather.values() {
            stream.validate()?;
        }
        for (key, log) in &self.logs {
            if key != &log.parcel_id {
                return Err(WorldError::invariant("log", key, "map key differs from log parcel_id"));
            }
            if !self.parcels.contains_key(&log.parcel_id) {
                return Err(WorldError::invariant(
                    "log",
                    &log.parcel_id,
                    format!("dangling reference: no parcel {:?}", log.parcel_id),
                ));
            }
            for event in &log.events {
                if event.t < self.season[0] || event.t > self.season[1] {
                    return Err(WorldError::invariant(
                        "log",
                        &log.parcel_id,
                        format!("event at t={} outside season {:?}", event.t, self.season),
                    ));
                }
                match event.action {
                    ManagementAction::Irrigate if event.q.unit != Unit::Millimeter => {
                        return Err(WorldError::invariant(
                            "log",
                            &log.parcel_id,
                            format!("irrigate event must be in mm, got {}", event.q.unit),
                        ));
                    }
                    ManagementAction::Fertilize if event.q.unit != Unit::KgPerHa => {
                        return Err(WorldError::invariant(
                            "log",
                            &log.parcel_id,
                            format!("fertilize event must be in kg_per_ha, got {}", event.q.unit),
                        ));
                    }
                    _ => {}
                }
                if !event.q.value.is_finite() {
                    return Err(WorldError::invariant("log", &log.parcel_id, "non-finite quantity"));
                }
            }
        }
        Ok(())
    }
}

fn validate_geometry(entity: &'static str, id: &str, geometry: &Polygon) -> Result<(), WorldError> {
    // Re-run the construction checks on deserialized geometry.
    match Polygon::new(geometry.rings.clone(), geometry.crs) {
        Ok(_) => Ok(()),
        Err(e @ GeometryError::OutOfDomain(_)) => {
            Err(WorldError::invariant(entity, id, e.to_string()))
        }
        Err(e) => Err(WorldError::invariant(entity, id, format!("invalid geometry: {e}"))),
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Minimal hand-built world: one region, a couple of parcels in GEO, a
    /// small metric NDVI raster and soil grid, one weather stream.
    pub fn tiny_world() -> WorldState {
        let crs_m = Crs::metric(0.0);
        let mut parcels = BTreeMap::new();
        for (id, min, max, crop) in [
            ("p1", [0.001, 0.001], [0.004, 0.004], Some(CropType::Maize)),
            ("p2", [0.005, 0.005], [0.008, 0.008], Some(CropType::Wheat)),
        ] {
            parcels.insert(
                id.to_string(),
                Parcel {
                    id: id.to_string(),
                    geometry: Polygon::rect(min, max, Crs::Geo).unwrap(),
                    crop_type: crop,
                    region_id: "r1".into(),
                    attributes: BTreeMap::new(),
                },
            );
        }
        let season = [0i64, 29];
        let n_days = 30usize;
        let (w, h) = (10usize, 10usize);
        // 0.01 degree extent at the equator is roughly 1.1 km.
        let extent_m = 1112.0;
        let px = extent_m / w as f64;
        let mut bands = BTreeMap::new();
        let mut values = Vec::with_capacity(n_days * w * h);
        for t in 0..n_days {
            for _ in 0..(w * h) {
                values.push(0.3 + 0.01 * t as f64);
            }
        }
        bands.insert("ndvi".to_string(), values);
        let raster = RasterTimeSeries {
            id: "ndvi".into(),
            crs: crs_m,
            origin: [0.0, 0.0],
            pixel_size: [px, px],
            width: w,
            height: h,
            timestamps: (0..n_days as i64).collect(),
            bands,
            mask: vec![1; n_days * w * h],
            units: [("ndvi".to_string(), Unit::Dimensionless)].into_iter().collect(),
        };
        let grid = GridField {
            id: "soil_water_capacity".into(),
            crs: crs_m,
            origin: [0.0, 0.0],
            pixel_size: [px, px],
            width: w,
            height: h,
            values: vec![120.0; w * h],
            unit: Unit::Millimeter,
            name: GridLayer::SoilWaterCapacity,
        };
        let records = (0..n_days as i64)
            .map(|t| WeatherRecord {
                t,
                precip_mm: if t % 7 == 3 { 8.0 } else { 0.0 },
                et0_mm: 3.0,
                tmax_degc: 25.0,
                tmin_degc: 13.0,
                rh_pct: 70.0,
            })
            .collect();
        let weather = WeatherStream { id: "wx_r1".into(), region_id: "r1".into(), records };
        let world = WorldState {
            world_id: "tiny".into(),
            season,
            parcels,
            rasters: [("ndvi".to_string(), raster)].into_iter().collect(),
            grids: [("soil_water_capacity".to_string(), grid)].into_iter().collect(),
            weather: [("wx_r1".to_string(), weather)].into_iter().collect(),
            logs: BTreeMap::new(),
        };
        world.validate().expect("tiny world must be valid");
        world
    }
}
