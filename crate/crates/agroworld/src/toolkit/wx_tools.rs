//! Weather series tools.

use super::args::{bad_arg, get_f64, get_i64, get_int_pair, get_series, get_str};
use super::{Args, ArtifactKind, ArtifactMeta, ErrorCode, ToolCtx, ToolError, ToolOutput};
use crate::model::weather::ALL_WEATHER_VARS;
use crate::model::WeatherVar;
use crate::units::Unit;
use serde_json::{json, Value};

pub(super) fn get(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let region = get_str(args, "region")?;
    let (t0, t1) = get_int_pair(args, "time_range")?;
    let var_key = get_str(args, "var")?;
    let var = WeatherVar::parse(var_key).ok_or_else(|| {
        bad_arg("var", format!("unknown weather variable {var_key:?}"))
            .with("valid", ALL_WEATHER_VARS.iter().map(|v| v.key()).collect::<Vec<_>>())
    })?;
    let stream = ctx.world.weather_for_region(region).ok_or_else(|| {
        ToolError::new(ErrorCode::UnknownRegion, format!("no weather stream for region {region:?}"))
            .with("arg", "region")
            .with("valid", ctx.world.regions())
    })?;
    let (a0, a1) = stream.time_bounds();
    if t0 < a0 || t1 > a1 || t0 > t1 {
        return Err(ToolError::new(
            ErrorCode::TemporalWindowError,
            format!("requested window [{t0}, {t1}] exceeds available [{a0}, {a1}]"),
        )
        .with("arg", "time_range")
        .with("requested", [t0, t1])
        .with("available", [a0, a1]));
    }
    let series = stream.daily(var, (t0, t1))?;
    let rows: Vec<Value> = series.iter().map(|(t, v)| json!([t, v])).collect();
    let value = json!({ "series": rows, "unit": var.unit(), "var": var_key });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Series,
        meta: ArtifactMeta { unit: Some(var.unit()), t_range: Some([t0, t1]), ..Default::default() },
    })
}

pub(super) fn rolling_sum(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let series = get_series(args, "series")?;
    let window = get_i64(args, "window")?;
    if window < 1 {
        return Err(bad_arg("window", "window must be a positive number of days"));
    }
    let window = window as usize;
    let unit = series.unit.clone().unwrap_or_else(|| "dimensionless".to_string());
    let mut rows = Vec::with_capacity(series.points.len());
    for i in 0..series.points.len() {
        let (t, _) = series.points[i];
        if i + 1 < window {
            rows.push(json!([t, Value::Null]));
            continue;
        }
        let tail = &series.points[i + 1 - window..=i];
        if tail.iter().any(|(_, v)| v.is_none()) {
            rows.push(json!([t, Value::Null]));
        } else {
            let sum: f64 = tail.iter().map(|(_, v)| v.unwrap()).sum();
            rows.push(json!([t, sum]));
        }
    }
    let t_range = series.points.first().map(|(t, _)| [*t, series.points.last().unwrap().0]);
    let value = json!({ "series": rows, "unit": unit, "window": window });
    let meta_unit = Unit::parse(&unit).ok();
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Series,
        meta: ArtifactMeta { unit: meta_unit, t_range, ..Default::default() },
    })
}

pub(super) fn degree_days(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let tmax = get_series(args, "tmax")?;
    let tmin = get_series(args, "tmin")?;
    let t_base = get_f64(args, "t_base")?;
    for (name, series) in [("tmax", &tmax), ("tmin", &tmin)] {
        let unit = series.unit.as_deref().unwrap_or("degC");
        if unit != "degC" {
            return Err(ToolError::new(
                ErrorCode::DimensionMismatch,
                format!("{name} series must be in degC, got {unit:?}"),
            )
            .with("arg", name)
            .with("observed", unit)
            .with("expected", "degC"));
        }
    }
    if tmax.points.len() != tmin.points.len()
        || tmax.points.iter().zip(&tmin.points).any(|(a, b)| a.0 != b.0)
    {
        return Err(bad_arg("tmin", "tmax and tmin series must cover identical days"));
    }
    let mut rows = Vec::with_capacity(tmax.points.len());
    let mut cumulative = 0.0;
    for ((t, hi), (_, lo)) in tmax.points.iter().zip(&tmin.points) {
        let (Some(hi), Some(lo)) = (hi, lo) else {
            return Err(bad_arg("tmax", "degree day inputs must not contain nulls"));
        };
        cumulative += ((hi + lo) / 2.0 - t_base).max(0.0);
        rows.push(json!([t, cumulative]));
    }
    let t_range = tmax.points.first().map(|(t, _)| [*t, tmax.points.last().unwrap().0]);
    let value = json!({ "series": rows, "t_base": t_base, "unit": Unit::DegCDay });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Series,
        meta: ArtifactMeta { unit: Some(Unit::DegCDay), t_range, ..Default::default() },
    })
}
