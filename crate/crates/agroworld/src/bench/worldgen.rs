//! Synthetic world generation.
//!
//! One seed fully determines the bundle: parcels and sensor footprints in
//! GEO, an NDVI raster time series in the local metric CRS (logistic green-up
//! plus pixel noise, stress dips burned into a subset of parcels, and a
//! Bernoulli cloud mask), a soil water capacity grid, one weather stream per
//! region, and irrigation/fertilization logs. Entity streams are forked from
//! the root RNG in a fixed order, so extending one family never reshuffles
//! another.

use super::rng::SplitMix64;
use crate::align::reproject_point;
use crate::geometry::{Crs, Polygon};
use crate::model::{
    GridField, GridLayer, ManagementAction, ManagementEvent, ManagementLog, Parcel,
    RasterTimeSeries, WeatherRecord, WeatherStream, WorldState, ALL_CROPS,
};
use crate::toolkit::rs_tools::zone_pixels;
use crate::units::{Quantity, Unit};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_EXTENT: [f64; 4] = [5.0, 44.0, 5.2, 44.2];
pub const RASTER_SIZE: usize = 96;
pub const NDVI_BAND: &str = "ndvi";
pub const SOIL_GRID_ID: &str = "soil_water_capacity";

/// Phenology fractions of the season used by both the generator and the
/// anomaly task family: the NDVI plateau is established well before the
/// baseline window opens, and stress dips are injected strictly after it.
pub const BASELINE_FRACTION: (f64, f64) = (0.58, 0.71);
pub const ANOMALY_WINDOW_FRACTION: f64 = 0.72;
pub const DIP_FRACTION: f64 = 0.73;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub n_parcels: usize,
    /// Degrees box: [lon_min, lat_min, lon_max, lat_max].
    pub extent: [f64; 4],
    pub season_days: i64,
    pub cloud_prob: f64,
    pub families: Vec<crate::protocol::TaskFamily>,
    pub tasks_per_family: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            n_parcels: 50,
            extent: DEFAULT_EXTENT,
            season_days: 120,
            cloud_prob: 0.25,
            families: crate::protocol::ALL_FAMILIES.to_vec(),
            tasks_per_family: 50,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> GenConfig {
        GenConfig { seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_parcels < 1 {
            return Err("n_parcels must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.cloud_prob) {
            return Err("cloud_prob must be in [0, 1)".into());
        }
        if self.season_days < 30 {
            return Err("season_days must be at least 30".into());
        }
        Ok(())
    }

    pub fn metric_crs(&self) -> Crs {
        Crs::metric((self.extent[1] + self.extent[3]) / 2.0)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Seasonal NDVI base curve: flat winter floor rising logistically to a
/// plateau around 0.77 by mid-season.
pub fn ndvi_base(d: i64, n: i64) -> f64 {
    let center = n as f64 / 3.0;
    let width = n as f64 / 15.0;
    0.15 + 0.62 * sigmoid((d as f64 - center) / width)
}

struct ParcelSeed {
    parcel: Parcel,
    has_dip: bool,
}

pub fn gen_world(cfg: &GenConfig) -> WorldState {
    cfg.validate().expect("config validated by callers");
    let mut root = SplitMix64::new(cfg.seed);
    let mut parcel_rng = root.fork("parcels");
    let mut footprint_rng = root.fork("footprints");
    let mut raster_rng = root.fork("raster");
    let mut soil_rng = root.fork("soil");
    let mut weather_rng = root.fork("weather");
    let mut log_rng = root.fork("logs");

    let [lon0, lat0, lon1, lat1] = cfg.extent;
    let mid_lon = (lon0 + lon1) / 2.0;
    let metric = cfg.metric_crs();
    let n = cfg.season_days;

    // Parcels on a jittered grid: trapezoids (convex, CCW) well inside their
    // cell so neighbors never touch.
    let cols = (cfg.n_parcels as f64).sqrt().ceil() as usize;
    let rows = cfg.n_parcels.div_ceil(cols);
    let (cell_w, cell_h) = ((lon1 - lon0) / cols as f64, (lat1 - lat0) / rows as f64);
    let mut seeds = Vec::with_capacity(cfg.n_parcels);
    for i in 0..cfg.n_parcels {
        let (row, col) = (i / cols, i % cols);
        let cx = lon0 + (col as f64 + 0.5) * cell_w;
        let cy = lat0 + (row as f64 + 0.5) * cell_h;
        let half_w = cell_w * parcel_rng.range_f64(0.18, 0.32);
        let half_h = cell_h * parcel_rng.range_f64(0.18, 0.32);
        let pinch = half_w * parcel_rng.range_f64(0.0, 0.3);
        let ring = vec![
            [cx - half_w, cy - half_h],
            [cx + half_w, cy - half_h],
            [cx + half_w - pinch, cy + half_h],
            [cx - half_w + pinch, cy + half_h],
        ];
        let geometry = Polygon::new(vec![ring], Crs::Geo).expect("generated ring is valid");
        let crop = *parcel_rng.pick(&ALL_CROPS);
        let has_dip = parcel_rng.chance(0.3);
        let id = format!("p{i:03}");
        let region_id = if cx < mid_lon { "west" } else { "east" }.to_string();
        seeds.push(ParcelSeed {
            parcel: Parcel {
                id,
                geometry,
                crop_type: Some(crop),
                region_id,
                attributes: BTreeMap::new(),
            },
            has_dip,
        });
    }

    // Sensor footprints: larger crop-free polygons overlapping the parcels.
    let n_footprints = (cfg.n_parcels / 10).max(3);
    let mut footprints = Vec::with_capacity(n_footprints);
    for i in 0..n_footprints {
        let anchor = &seeds[(footprint_rng.next_u64() % seeds.len() as u64) as usize].parcel;
        let c = anchor.geometry.anchor();
        let half_w = cell_w * footprint_rng.range_f64(0.4, 0.7);
        let half_h = cell_h * footprint_rng.range_f64(0.4, 0.7);
        let ring = vec![
            [c[0] - half_w, c[1] - half_h],
            [c[0] + half_w, c[1] - half_h],
            [c[0] + half_w, c[1] + half_h],
            [c[0] - half_w, c[1] + half_h],
        ];
        footprints.push(Parcel {
            id: format!("f{i:03}"),
            geometry: Polygon::new(vec![ring], Crs::Geo).expect("generated ring is valid"),
            crop_type: None,
            region_id: if c[0] < mid_lon { "west" } else { "east" }.to_string(),
            attributes: BTreeMap::new(),
        });
    }

    // Raster geometry: the metric bounding box of the extent.
    let bl = reproject_point([lon0, lat0], Crs::Geo, metric).expect("extent in domain");
    let tr = reproject_point([lon1, lat1], Crs::Geo, metric).expect("extent in domain");
    let (w, h) = (RASTER_SIZE, RASTER_SIZE);
    let pixel_size = [(tr[0] - bl[0]) / w as f64, (tr[1] - bl[1]) / h as f64];
    let cells = w * h;
    let timestamps: Vec<i64> = (0..n).collect();

    let mut values = Vec::with_capacity(n as usize * cells);
    for d in 0..n {
        let base = ndvi_base(d, n);
        for _ in 0..cells {
            let noisy = base + raster_rng.range_f64(-0.02, 0.02);
            values.push(noisy.clamp(0.01, 0.99));
        }
    }

    let mut raster = RasterTimeSeries {
        id: NDVI_BAND.to_string(),
        crs: metric,
        origin: bl,
        pixel_size,
        width: w,
        height: h,
        timestamps,
        bands: BTreeMap::new(),
        mask: Vec::new(),
        units: [(NDVI_BAND.to_string(), Unit::Dimensionless)].into_iter().collect(),
    };

    // Stress dips: contiguous windows after the anomaly baseline closes,
    // burned into the clean signal of the affected parcel's pixels.
    let dip_lo = (DIP_FRACTION * n as f64).ceil() as i64;
    let dip_hi = n - 16;
    for seed in &seeds {
        if !seed.has_dip || dip_lo >= dip_hi {
            continue;
        }
        let start = raster_rng.range_i64(dip_lo, dip_hi);
        let len = raster_rng.range_i64(6, 12);
        let depth = raster_rng.range_f64(0.2, 0.35);
        let poly = crate::align::reproject_polygon(&seed.parcel.geometry, metric)
            .expect("extent in domain");
        let pixels = zone_pixels_on(&raster, &poly);
        for t in start..(start + len).min(n) {
            for &(row, col) in &pixels {
                let idx = (t as usize * h + row) * w + col;
                values[idx] = (values[idx] - depth).max(0.01);
            }
        }
    }

    let mask: Vec<u8> = (0..n as usize * cells)
        .map(|_| u8::from(!raster_rng.chance(cfg.cloud_prob)))
        .collect();
    raster.bands.insert(NDVI_BAND.to_string(), values);
    raster.mask = mask;

    let soil = GridField {
        id: SOIL_GRID_ID.to_string(),
        crs: metric,
        origin: bl,
        pixel_size,
        width: w,
        height: h,
        values: (0..cells).map(|_| soil_rng.range_f64(80.0, 200.0)).collect(),
        unit: Unit::Millimeter,
        name: GridLayer::SoilWaterCapacity,
    };

    let mut weather = BTreeMap::new();
    for region in ["east", "west"] {
        let phase = weather_rng.range_f64(0.0, std::f64::consts::TAU);
        let records: Vec<WeatherRecord> = (0..n)
            .map(|d| {
                let s = (std::f64::consts::PI * d as f64 / n as f64).sin();
                let precip = if weather_rng.chance(0.25) {
                    let u = weather_rng.next_f64();
                    u * u * 22.0
                } else {
                    0.0
                };
                let et0 = (2.0 + 3.0 * s + weather_rng.range_f64(-0.2, 0.2)).max(0.0);
                let tmax = 21.0 + 7.0 * s + weather_rng.range_f64(-1.0, 1.0);
                let tmin = tmax - 6.0 - weather_rng.range_f64(0.0, 4.0);
                let rh = (62.0
                    + 26.0 * (std::f64::consts::TAU * d as f64 / 13.0 + phase).sin()
                    + weather_rng.range_f64(-3.0, 3.0))
                .clamp(5.0, 98.0);
                WeatherRecord {
                    t: d,
                    precip_mm: precip,
                    et0_mm: et0,
                    tmax_degc: tmax,
                    tmin_degc: tmin,
                    rh_pct: rh,
                }
            })
            .collect();
        weather.insert(
            format!("wx_{region}"),
            WeatherStream { id: format!("wx_{region}"), region_id: region.to_string(), records },
        );
    }

    let mut logs = BTreeMap::new();
    for seed in &seeds {
        let mut events = Vec::new();
        if log_rng.chance(0.5) {
            let count = log_rng.range_i64(1, 3);
            for _ in 0..count {
                events.push(ManagementEvent {
                    t: log_rng.range_i64(n / 5, 4 * n / 5),
                    action: ManagementAction::Irrigate,
                    q: Quantity::new(log_rng.range_f64(8.0, 22.0), Unit::Millimeter)
                        .expect("finite"),
                });
            }
        }
        if log_rng.chance(0.3) {
            events.push(ManagementEvent {
                t: log_rng.range_i64(n / 10, 3 * n / 10),
                action: ManagementAction::Fertilize,
                q: Quantity::new(log_rng.range_f64(40.0, 100.0), Unit::KgPerHa).expect("finite"),
            });
        }
        if !events.is_empty() {
            events.sort_by_key(|e| e.t);
            logs.insert(
                seed.parcel.id.clone(),
                ManagementLog { parcel_id: seed.parcel.id.clone(), events },
            );
        }
    }

    let mut parcels = BTreeMap::new();
    for seed in seeds {
        parcels.insert(seed.parcel.id.clone(), seed.parcel);
    }
    for f in footprints {
        parcels.insert(f.id.clone(), f);
    }

    let world = WorldState {
        world_id: format!("agw_{}", cfg.seed),
        season: [0, n - 1],
        parcels,
        rasters: [(raster.id.clone(), raster)].into_iter().collect(),
        grids: [(soil.id.clone(), soil)].into_iter().collect(),
        weather,
        logs,
    };
    world.validate().expect("generated world must be valid");
    world
}

fn zone_pixels_on(raster: &RasterTimeSeries, poly: &Polygon) -> Vec<(usize, usize)> {
    zone_pixels(raster, poly)
}
