//! Shared fixtures for integration tests: the randomized zonal-statistics
//! brute-force suite and its worked example.

use agroworld::bench::SplitMix64;
use agroworld::geometry::{Crs, Polygon};
use agroworld::model::{RasterTimeSeries, WorldState};
use agroworld::toolkit::{ErrorCode, Registry, ToolCall};
use agroworld::units::Unit;
use serde_json::{json, Value};
use std::collections::BTreeMap;

pub const TAU_MIN: f64 = 0.3;
const SIZE: usize = 16;

pub fn empty_world_with_raster(raster: RasterTimeSeries) -> WorldState {
    let world = WorldState {
        world_id: "oracle_fixture".into(),
        season: [raster.timestamps[0], *raster.timestamps.last().unwrap()],
        parcels: BTreeMap::new(),
        rasters: [(raster.id.clone(), raster)].into_iter().collect(),
        grids: BTreeMap::new(),
        weather: BTreeMap::new(),
        logs: BTreeMap::new(),
    };
    world.validate().expect("fixture world is valid");
    world
}

pub fn random_raster(rng: &mut SplitMix64, days: usize) -> RasterTimeSeries {
    let cells = SIZE * SIZE;
    let values: Vec<f64> = (0..days * cells).map(|_| rng.range_f64(-5.0, 5.0)).collect();
    let mask: Vec<u8> = (0..days * cells).map(|_| u8::from(!rng.chance(0.4))).collect();
    RasterTimeSeries {
        id: "band".into(),
        crs: Crs::metric(0.0),
        origin: [0.0, 0.0],
        pixel_size: [10.0, 10.0],
        width: SIZE,
        height: SIZE,
        timestamps: (0..days as i64).collect(),
        bands: [("band".to_string(), values)].into_iter().collect(),
        mask,
        units: [("band".to_string(), Unit::Dimensionless)].into_iter().collect(),
    }
}

pub fn random_parcel(rng: &mut SplitMix64) -> Polygon {
    let x0 = rng.range_f64(-15.0, 120.0);
    let y0 = rng.range_f64(-15.0, 120.0);
    let w = rng.range_f64(15.0, 70.0);
    let h = rng.range_f64(15.0, 70.0);
    let pinch = w * rng.range_f64(0.0, 0.3);
    Polygon::new(
        vec![vec![
            [x0, y0],
            [x0 + w, y0],
            [x0 + w - pinch, y0 + h],
            [x0 + pinch, y0 + h],
        ]],
        Crs::metric(0.0),
    )
    .expect("generated trapezoid is valid")
}

pub struct ZonalSuiteStats {
    pub clean_days: usize,
    pub gate_trips: usize,
    pub empty_zones: usize,
}

/// Run `trials` randomized (parcel, 16x16 raster, mask) triples through
/// `rs.zonal_stats` and an exhaustive per-pixel loop; panic on the first
/// discrepancy. Every day with a validity ratio below the gate must raise,
/// and no mean may ever be produced for such a day.
pub fn zonal_brute_force_suite(trials: usize, seed: u64) -> ZonalSuiteStats {
    let mut rng = SplitMix64::new(seed);
    let registry = Registry::full();
    let mut stats = ZonalSuiteStats { clean_days: 0, gate_trips: 0, empty_zones: 0 };

    for trial in 0..trials {
        let days = 1 + (trial % 3);
        let raster = random_raster(&mut rng, days);
        let poly = random_parcel(&mut rng);

        // Exhaustive oracle: scan the whole grid, fold masked sums by hand.
        let mut zone = Vec::new();
        for row in 0..raster.height {
            for col in 0..raster.width {
                let c = raster.pixel_center(row, col);
                if poly.contains(c[0], c[1]) {
                    zone.push((row, col));
                }
            }
        }
        let band = raster.bands["band"].clone();
        let mut per_day: Vec<Result<(f64, f64), f64>> = Vec::new();
        for t in 0..days {
            let mut masked_sum = 0.0;
            let mut valid = 0usize;
            for &(row, col) in &zone {
                let i = raster.index(t, row, col);
                if raster.mask[i] == 1 {
                    masked_sum += band[i];
                    valid += 1;
                }
            }
            if zone.is_empty() {
                continue;
            }
            let nu = valid as f64 / zone.len() as f64;
            if nu < TAU_MIN {
                per_day.push(Err(nu));
            } else {
                per_day.push(Ok((masked_sum / valid as f64, nu)));
            }
        }
        let zone_size = zone.len();
        let world = empty_world_with_raster(raster);

        let mut args: BTreeMap<String, Value> = BTreeMap::new();
        args.insert(
            "raster".into(),
            json!({"raster_id": "band", "band": "band", "crs": {"kind": "metric", "lat0": 0.0},
                   "time_range": [0, days as i64 - 1], "unit": "dimensionless"}),
        );
        args.insert("zones".into(), json!([{ "parcel_id": "z", "polygon": poly }]));
        args.insert("stat".into(), json!("mean"));
        let result = registry.invoke(&world, &ToolCall { tool: "rs.zonal_stats".into(), args });

        if zone_size == 0 {
            assert_eq!(result.unwrap_err().code, ErrorCode::EmptyZone, "trial {trial}");
            stats.empty_zones += 1;
            continue;
        }
        if let Some(first_gate) = per_day.iter().position(|d| d.is_err()) {
            let err = result.expect_err("low coverage must raise");
            assert_eq!(err.code, ErrorCode::LowCoverage, "trial {trial}");
            let nu = err.detail("validity_ratio").unwrap().as_f64().unwrap();
            assert_eq!(nu, per_day[first_gate].unwrap_err(), "trial {trial}");
            assert_eq!(err.detail("t").unwrap().as_i64().unwrap(), first_gate as i64);
            stats.gate_trips += 1;
            continue;
        }
        let (value, artifact) = result.expect("clean trials succeed");
        let rows = value["rows"]["z"].as_array().unwrap();
        let mut min_nu = f64::INFINITY;
        for (t, row) in rows.iter().enumerate() {
            let (mean, nu) = per_day[t].unwrap();
            assert_eq!(row[1].as_f64().unwrap(), mean, "trial {trial} day {t}");
            min_nu = min_nu.min(nu);
            stats.clean_days += 1;
        }
        assert_eq!(artifact.meta.validity_ratio.unwrap(), min_nu, "trial {trial}");
    }
    stats
}

/// The worked 3x3 case: values 1..9 row-major, corners masked, parcel over
/// the full extent → mean 5.0 over {2,4,5,6,8}, validity 5/9.
pub fn worked_three_by_three() {
    let mut raster = random_raster(&mut SplitMix64::new(0), 1);
    raster.width = 3;
    raster.height = 3;
    raster.bands.insert("band".to_string(), (1..=9).map(f64::from).collect());
    let mut mask = vec![1u8; 9];
    for corner in [0usize, 2, 6, 8] {
        mask[corner] = 0;
    }
    raster.mask = mask;
    let world = empty_world_with_raster(raster);
    let registry = Registry::full();
    let mut args: BTreeMap<String, Value> = BTreeMap::new();
    args.insert(
        "raster".into(),
        json!({"raster_id": "band", "band": "band", "crs": {"kind": "metric", "lat0": 0.0},
               "time_range": [0, 0], "unit": "dimensionless"}),
    );
    args.insert(
        "zones".into(),
        json!([{ "parcel_id": "z",
                 "polygon": Polygon::rect([-1.0, -1.0], [31.0, 31.0], Crs::metric(0.0)).unwrap() }]),
    );
    args.insert("stat".into(), json!("mean"));
    let (value, artifact) = registry
        .invoke(&world, &ToolCall { tool: "rs.zonal_stats".into(), args })
        .unwrap();
    assert_eq!(value["rows"]["z"][0][1], json!(5.0));
    assert!((artifact.meta.validity_ratio.unwrap() - 5.0 / 9.0).abs() < 1e-15);
}
