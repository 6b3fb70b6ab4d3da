//! Remote-sensing analytics: raster views, masked zonal statistics with a
//! validity-ratio gate, and z-score anomaly detection.

use super::args::{bad_arg, get_f64, get_int_pair, get_opt_str, get_series, get_str};
use super::zones::resolve_zones;
use super::{Args, ArtifactKind, ArtifactMeta, ErrorCode, ToolCtx, ToolError, ToolOutput};
use crate::geometry::{Crs, Polygon};
use crate::model::RasterTimeSeries;
use crate::units::Unit;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Handle to a time-sliced raster band, the value produced by `rs.load` and
/// consumed by `rs.zonal_stats`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterView {
    pub raster_id: String,
    pub band: String,
    pub crs: Crs,
    pub time_range: [i64; 2],
    pub unit: Unit,
}

pub(crate) fn load(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let band = get_str(args, "band")?;
    let (t0, t1) = get_int_pair(args, "time_range")?;
    // The optional region argument scopes provenance; views are not cropped
    // spatially (zonal statistics does the spatial subsetting).
    let _region = args.get("region");

    let raster = match get_opt_str(args, "raster_id") {
        Some(id) => ctx.world.rasters.get(id).ok_or_else(|| {
            bad_arg("raster_id", format!("unknown raster {id:?}"))
                .with("valid", ctx.world.rasters.keys().collect::<Vec<_>>())
        })?,
        None => ctx
            .world
            .rasters
            .values()
            .find(|r| r.bands.contains_key(band))
            .ok_or_else(|| unknown_band(ctx, band))?,
    };
    if !raster.bands.contains_key(band) {
        return Err(unknown_band(ctx, band));
    }
    let (a0, a1) = raster.time_bounds();
    if t0 < a0 || t1 > a1 || t0 > t1 {
        return Err(window_error("time_range", (t0, t1), (a0, a1)));
    }
    let unit = raster.units[band];
    let view = RasterView {
        raster_id: raster.id.clone(),
        band: band.to_string(),
        crs: raster.crs,
        time_range: [t0, t1],
        unit,
    };
    Ok(ToolOutput {
        value: serde_json::to_value(&view).expect("view serializes"),
        kind: ArtifactKind::Series,
        meta: ArtifactMeta {
            unit: Some(unit),
            crs: Some(raster.crs),
            resolution: Some(raster.pixel_size),
            t_range: Some([t0, t1]),
            validity_ratio: None,
        },
    })
}

fn unknown_band(ctx: &ToolCtx, band: &str) -> ToolError {
    let mut valid: Vec<String> = ctx
        .world
        .rasters
        .values()
        .flat_map(|r| r.bands.keys().cloned())
        .collect();
    valid.sort();
    valid.dedup();
    ToolError::new(ErrorCode::UnknownBand, format!("no raster carries band {band:?}"))
        .with("arg", "band")
        .with("valid", valid)
}

fn window_error(arg: &str, requested: (i64, i64), available: (i64, i64)) -> ToolError {
    ToolError::new(
        ErrorCode::TemporalWindowError,
        format!(
            "requested window [{}, {}] exceeds available [{}, {}]",
            requested.0, requested.1, available.0, available.1
        ),
    )
    .with("arg", arg)
    .with("requested", [requested.0, requested.1])
    .with("available", [available.0, available.1])
}

/// Pixels (row, col) of the raster grid whose centers fall inside the
/// polygon. The loop is clipped to the polygon's bounding box; containment
/// itself is the ray-cast predicate, identical to a full-grid scan.
pub fn zone_pixels(raster: &RasterTimeSeries, poly: &Polygon) -> Vec<(usize, usize)> {
    let (min, max) = poly.bbox();
    let [dx, dy] = raster.pixel_size;
    let col0 = (((min[0] - raster.origin[0]) / dx - 0.5).floor().max(0.0)) as usize;
    let row0 = (((min[1] - raster.origin[1]) / dy - 0.5).floor().max(0.0)) as usize;
    let col1 = ((((max[0] - raster.origin[0]) / dx - 0.5).ceil()).max(0.0) as usize).min(raster.width.saturating_sub(1));
    let row1 = ((((max[1] - raster.origin[1]) / dy - 0.5).ceil()).max(0.0) as usize).min(raster.height.saturating_sub(1));
    let mut pixels = Vec::new();
    if col0 > col1 || row0 > row1 {
        return pixels;
    }
    for row in row0..=row1 {
        for col in col0..=col1 {
            let c = raster.pixel_center(row, col);
            if poly.contains(c[0], c[1]) {
                pixels.push((row, col));
            }
        }
    }
    pixels
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZonalStat {
    Mean,
    Min,
    Max,
    Count,
}

impl ZonalStat {
    fn parse(s: &str) -> Option<ZonalStat> {
        match s {
            "mean" => Some(ZonalStat::Mean),
            "min" => Some(ZonalStat::Min),
            "max" => Some(ZonalStat::Max),
            "count" => Some(ZonalStat::Count),
            _ => None,
        }
    }
}

pub const DEFAULT_TAU_MIN: f64 = 0.3;

pub(crate) fn zonal_stats(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let view: RasterView = serde_json::from_value(
        args.get("raster").cloned().ok_or_else(|| bad_arg("raster", "raster view is required"))?,
    )
    .map_err(|e| bad_arg("raster", format!("raster argument must be an rs.load view: {e}")))?;
    let stat_name = get_str(args, "stat")?;
    let stat = ZonalStat::parse(stat_name).ok_or_else(|| {
        bad_arg("stat", format!("unsupported statistic {stat_name:?}"))
            .with("valid", ["mean", "min", "max", "count"])
    })?;
    let tau_min = if args.contains_key("tau_min") { get_f64(args, "tau_min")? } else { DEFAULT_TAU_MIN };
    if !(0.0..=1.0).contains(&tau_min) {
        return Err(bad_arg("tau_min", "tau_min must be in [0, 1]"));
    }
    let raster = ctx
        .world
        .rasters
        .get(&view.raster_id)
        .ok_or_else(|| bad_arg("raster", format!("view names unknown raster {:?}", view.raster_id)))?;
    let band = raster
        .bands
        .get(&view.band)
        .ok_or_else(|| unknown_band(ctx, &view.band))?;
    let (a0, a1) = raster.time_bounds();
    let (t0, t1) = (view.time_range[0], view.time_range[1]);
    if t0 < a0 || t1 > a1 || t0 > t1 {
        return Err(window_error("raster", (t0, t1), (a0, a1)));
    }
    let zones = resolve_zones(ctx.world, args, "zones")?;

    let mut rows = Map::new();
    let mut min_nu: Option<f64> = None;
    for zone in &zones {
        ctx.ensure_aligned("zones", &zone.polygon.crs, &raster.crs)?;
        let pixels = zone_pixels(raster, &zone.polygon);
        if pixels.is_empty() {
            return Err(ToolError::new(
                ErrorCode::EmptyZone,
                format!("no pixel centers fall inside parcel {:?}", zone.parcel_id),
            )
            .with("parcel_id", &zone.parcel_id));
        }
        let zone_size = pixels.len() as f64;
        let mut series = Vec::new();
        for t in t0..=t1 {
            let t_idx = raster.time_index(t).expect("window checked against bounds");
            let mut valid = 0usize;
            let mut sum = 0.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &(row, col) in &pixels {
                let i = raster.index(t_idx, row, col);
                if raster.mask[i] == 1 {
                    valid += 1;
                    let v = band[i];
                    sum += v;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            let nu = valid as f64 / zone_size;
            // The coverage gate fires before any statistic is computed.
            if nu < tau_min {
                return Err(ToolError::new(
                    ErrorCode::LowCoverage,
                    format!(
                        "validity ratio {nu:.4} below tau_min {tau_min} for parcel {:?} at t={t}",
                        zone.parcel_id
                    ),
                )
                .with("parcel_id", &zone.parcel_id)
                .with("t", t)
                .with("validity_ratio", nu)
                .with("tau_min", tau_min));
            }
            min_nu = Some(min_nu.map_or(nu, |m: f64| m.min(nu)));
            let value = match stat {
                ZonalStat::Mean => sum / valid as f64,
                ZonalStat::Min => lo,
                ZonalStat::Max => hi,
                ZonalStat::Count => valid as f64,
            };
            series.push(json!([t, value]));
        }
        rows.insert(zone.parcel_id.clone(), Value::Array(series));
    }

    let unit = match stat {
        ZonalStat::Count => Unit::Dimensionless,
        _ => view.unit,
    };
    let value = json!({ "rows": rows, "stat": stat_name, "unit": unit });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Table,
        meta: ArtifactMeta {
            unit: Some(unit),
            crs: Some(raster.crs),
            resolution: Some(raster.pixel_size),
            validity_ratio: min_nu,
            t_range: Some([t0, t1]),
        },
    })
}

pub const DEFAULT_ZSCORE_THRESHOLD: f64 = 2.5;

pub(crate) fn anomaly(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let series = get_series(args, "series")?;
    let (b0, b1) = get_int_pair(args, "baseline_window")?;
    let method = get_opt_str(args, "method").unwrap_or("zscore");
    if method != "zscore" {
        return Err(bad_arg("method", format!("unsupported method {method:?}")).with("valid", ["zscore"]));
    }
    let threshold = if args.contains_key("threshold") {
        get_f64(args, "threshold")?
    } else {
        DEFAULT_ZSCORE_THRESHOLD
    };

    let baseline: Vec<f64> = series
        .points
        .iter()
        .filter(|(t, v)| *t >= b0 && *t <= b1 && v.is_some())
        .map(|(_, v)| v.unwrap())
        .collect();
    if baseline.len() < 2 {
        return Err(ToolError::new(
            ErrorCode::EmptyBaseline,
            format!("baseline window [{b0}, {b1}] holds {} samples, need at least 2", baseline.len()),
        )
        .with("arg", "baseline_window"));
    }
    let mean = baseline.iter().sum::<f64>() / baseline.len() as f64;
    // Population standard deviation: defined even for two-sample baselines.
    let variance = baseline.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / baseline.len() as f64;
    let std = variance.sqrt();

    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for (t, v) in &series.points {
        let Some(x) = v else { continue };
        let (score, is_flagged) = if std > 0.0 {
            let s = (x - mean) / std;
            (json!(s), s.abs() > threshold)
        } else if x == &mean {
            (json!(0.0), false)
        } else {
            // Degenerate baseline: any deviation is infinitely surprising.
            let marker = if x > &mean { "+inf" } else { "-inf" };
            (json!(marker), true)
        };
        rows.push(json!({"flagged": is_flagged, "score": score, "t": t}));
        if is_flagged {
            flagged.push(json!([t, score]));
        }
    }
    let t_range = series
        .points
        .first()
        .map(|(t, _)| [*t, series.points.last().unwrap().0]);
    let value = json!({
        "baseline": {"mean": mean, "std": std, "window": [b0, b1]},
        "flagged": flagged,
        "rows": rows,
        "threshold": threshold,
        "unit": "dimensionless",
    });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Series,
        meta: ArtifactMeta { unit: Some(Unit::Dimensionless), t_range, ..Default::default() },
    })
}
