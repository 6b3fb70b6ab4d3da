//! Argument extraction helpers shared by the tool implementations.

use super::{Args, ErrorCode, ToolError};
use serde_json::Value;

pub(crate) fn bad_arg(arg: &str, message: impl Into<String>) -> ToolError {
    ToolError::new(ErrorCode::ArgumentError, message.into()).with("arg", arg)
}

pub(crate) fn get_str<'a>(args: &'a Args, name: &str) -> Result<&'a str, ToolError> {
    args.get(name)
        .and_then(Value::as_str)
        .ok_or_else(|| bad_arg(name, format!("argument {name:?} must be a string")))
}

pub(crate) fn get_opt_str<'a>(args: &'a Args, name: &str) -> Option<&'a str> {
    args.get(name).and_then(Value::as_str)
}

pub(crate) fn get_f64(args: &Args, name: &str) -> Result<f64, ToolError> {
    args.get(name)
        .and_then(Value::as_f64)
        .ok_or_else(|| bad_arg(name, format!("argument {name:?} must be a number")))
}

pub(crate) fn get_i64(args: &Args, name: &str) -> Result<i64, ToolError> {
    args.get(name)
        .and_then(Value::as_i64)
        .ok_or_else(|| bad_arg(name, format!("argument {name:?} must be an integer")))
}

pub(crate) fn get_int_pair(args: &Args, name: &str) -> Result<(i64, i64), ToolError> {
    let arr = args
        .get(name)
        .and_then(Value::as_array)
        .ok_or_else(|| bad_arg(name, format!("argument {name:?} must be [start, end]")))?;
    match (arr.first().and_then(Value::as_i64), arr.get(1).and_then(Value::as_i64)) {
        (Some(a), Some(b)) if arr.len() == 2 => Ok((a, b)),
        _ => Err(bad_arg(name, format!("argument {name:?} must be [start, end]"))),
    }
}

pub(crate) fn get_opt_int_pair(args: &Args, name: &str) -> Result<Option<(i64, i64)>, ToolError> {
    if args.contains_key(name) {
        get_int_pair(args, name).map(Some)
    } else {
        Ok(None)
    }
}

/// A series argument: either `{"series": [[t, v], ...], "unit": "..."}` or a
/// bare `[[t, v], ...]` array. Values may be null (e.g. rolling warm-up).
pub(crate) struct SeriesArg {
    pub points: Vec<(i64, Option<f64>)>,
    pub unit: Option<String>,
}

pub(crate) fn get_series(args: &Args, name: &str) -> Result<SeriesArg, ToolError> {
    let raw = args
        .get(name)
        .ok_or_else(|| bad_arg(name, format!("argument {name:?} is required")))?;
    let (rows, unit) = match raw {
        Value::Array(rows) => (rows, None),
        Value::Object(obj) => {
            let rows = obj
                .get("series")
                .and_then(Value::as_array)
                .ok_or_else(|| bad_arg(name, format!("argument {name:?} object must carry \"series\"")))?;
            let unit = obj.get("unit").and_then(Value::as_str).map(str::to_string);
            (rows, unit)
        }
        _ => return Err(bad_arg(name, format!("argument {name:?} must be a series"))),
    };
    let mut points = Vec::with_capacity(rows.len());
    for row in rows {
        let pair = row
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| bad_arg(name, format!("series rows in {name:?} must be [t, value]")))?;
        let t = pair[0]
            .as_i64()
            .ok_or_else(|| bad_arg(name, format!("series timestamps in {name:?} must be integers")))?;
        let v = match &pair[1] {
            Value::Null => None,
            v => Some(
                v.as_f64()
                    .ok_or_else(|| bad_arg(name, format!("series values in {name:?} must be numbers")))?,
            ),
        };
        points.push((t, v));
    }
    Ok(SeriesArg { points, unit })
}
