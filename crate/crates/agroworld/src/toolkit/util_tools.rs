//! Small value-shaping tools: unit conversion, table and series accessors.
//!
//! These keep plan programs declarative — a plan extracts scalars from tool
//! outputs through the registry instead of embedding ad-hoc literals, so
//! every number in an answer traces back to an artifact.

use super::args::{bad_arg, get_i64, get_opt_int_pair, get_series, get_str};
use super::{Args, ArtifactKind, ArtifactMeta, ErrorCode, ToolCtx, ToolError, ToolOutput};
use crate::units::{Quantity, Unit};
use serde_json::{json, Value};

pub(super) fn convert(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let raw = args.get("value").ok_or_else(|| bad_arg("value", "quantity is required"))?;
    let quantity: Quantity = serde_json::from_value(raw.clone())
        .map_err(|e| bad_arg("value", format!("value must be {{\"unit\": ..., \"value\": ...}}: {e}")))?;
    let target = Unit::parse(get_str(args, "target")?)?;
    let converted = quantity.convert(target)?;
    Ok(ToolOutput {
        value: json!({ "unit": target, "value": converted.value }),
        kind: ArtifactKind::Scalar,
        meta: ArtifactMeta::unit(target),
    })
}

fn table_unit(table: &Value) -> (Option<Unit>, String) {
    let symbol = table
        .get("unit")
        .and_then(Value::as_str)
        .unwrap_or("dimensionless")
        .to_string();
    (Unit::parse(&symbol).ok(), symbol)
}

fn table_row<'a>(args: &'a Args) -> Result<(&'a Value, &'a Value, &'a str), ToolError> {
    let table = args.get("table").ok_or_else(|| bad_arg("table", "table is required"))?;
    let key = get_str(args, "key")?;
    let rows = table
        .get("rows")
        .and_then(Value::as_object)
        .ok_or_else(|| bad_arg("table", "table must carry a \"rows\" object"))?;
    let row = rows.get(key).ok_or_else(|| {
        bad_arg("key", format!("table has no row {key:?}"))
            .with("valid", rows.keys().collect::<Vec<_>>())
    })?;
    Ok((table, row, key))
}

pub(super) fn tbl_pick(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let (table, row, key) = table_row(args)?;
    let scalar = row.as_f64().ok_or_else(|| {
        bad_arg("key", format!("row {key:?} is not a scalar cell; use tbl.row for series rows"))
    })?;
    let (unit, symbol) = table_unit(table);
    Ok(ToolOutput {
        value: json!({ "unit": symbol, "value": scalar }),
        kind: ArtifactKind::Scalar,
        meta: ArtifactMeta { unit, ..Default::default() },
    })
}

pub(super) fn tbl_row(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let (table, row, key) = table_row(args)?;
    let series = row
        .as_array()
        .ok_or_else(|| bad_arg("key", format!("row {key:?} is not a series; use tbl.pick for scalars")))?;
    let (unit, symbol) = table_unit(table);
    let t_range = match (series.first(), series.last()) {
        (Some(first), Some(last)) => match (first.get(0).and_then(Value::as_i64), last.get(0).and_then(Value::as_i64)) {
            (Some(a), Some(b)) => Some([a, b]),
            _ => None,
        },
        _ => None,
    };
    Ok(ToolOutput {
        value: json!({ "series": series, "unit": symbol }),
        kind: ArtifactKind::Series,
        meta: ArtifactMeta { unit, t_range, ..Default::default() },
    })
}

pub(super) fn series_mean(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let series = get_series(args, "series")?;
    let range = get_opt_int_pair(args, "t_range")?;
    let values: Vec<f64> = series
        .points
        .iter()
        .filter(|(t, v)| v.is_some() && range.is_none_or(|(a, b)| *t >= a && *t <= b))
        .map(|(_, v)| v.unwrap())
        .collect();
    if values.is_empty() {
        return Err(ToolError::new(ErrorCode::EmptySeries, "no samples to average").with("arg", "series"));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let symbol = series.unit.unwrap_or_else(|| "dimensionless".to_string());
    Ok(ToolOutput {
        value: json!({ "unit": symbol, "value": mean }),
        kind: ArtifactKind::Scalar,
        meta: ArtifactMeta { unit: Unit::parse(&symbol).ok(), ..Default::default() },
    })
}

/// Declarative plot description: series plus axes and title, never a
/// rendered image, so figure artifacts stay bit-exact.
pub(super) fn plot(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let series = get_series(args, "series")?;
    let title = get_str(args, "title")?;
    let y_label = args.get("y_label").and_then(Value::as_str).unwrap_or("value");
    let rows: Vec<Value> = series
        .points
        .iter()
        .map(|(t, v)| match v {
            Some(v) => json!([t, v]),
            None => json!([t, Value::Null]),
        })
        .collect();
    let symbol = series.unit.unwrap_or_else(|| "dimensionless".to_string());
    let value = json!({
        "series": rows,
        "title": title,
        "unit": symbol,
        "x_label": "day",
        "y_label": y_label,
    });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::FigureSpec,
        meta: ArtifactMeta { unit: Unit::parse(&symbol).ok(), ..Default::default() },
    })
}

pub(super) fn series_pick(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let _ = ctx;
    let series = get_series(args, "series")?;
    let t = get_i64(args, "t")?;
    let (t0, t1) = match (series.points.first(), series.points.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(ToolError::new(ErrorCode::EmptySeries, "series is empty").with("arg", "series")),
    };
    let Some((_, Some(v))) = series.points.iter().find(|(ti, _)| *ti == t) else {
        return Err(ToolError::new(
            ErrorCode::TemporalWindowError,
            format!("series has no value at day {t}"),
        )
        .with("arg", "t")
        .with("requested", [t, t])
        .with("available", [t0, t1]));
    };
    let symbol = series.unit.unwrap_or_else(|| "dimensionless".to_string());
    Ok(ToolOutput {
        value: json!({ "unit": symbol, "value": v }),
        kind: ArtifactKind::Scalar,
        meta: ArtifactMeta { unit: Unit::parse(&symbol).ok(), ..Default::default() },
    })
}
