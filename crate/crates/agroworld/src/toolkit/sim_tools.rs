//! Registry bindings for the simulator and predictors.

use super::args::{bad_arg, get_int_pair, get_str};
use super::{Args, ArtifactKind, ArtifactMeta, ErrorCode, ToolCtx, ToolError, ToolOutput};
use crate::sim::{self, DeltaTarget, Intervention, SimError};
use crate::units::Unit;
use serde_json::{json, Value};

impl From<SimError> for ToolError {
    fn from(e: SimError) -> ToolError {
        let message = e.to_string();
        match e {
            SimError::UnknownParcel(id) | SimError::NoCrop(id) => {
                ToolError::new(ErrorCode::ArgumentError, message).with("arg", "parcel").with("parcel_id", id)
            }
            SimError::NoSoilCoverage(id) => {
                ToolError::new(ErrorCode::EmptyZone, message).with("parcel_id", id)
            }
            SimError::NoWeather(region) => {
                ToolError::new(ErrorCode::UnknownRegion, message).with("region", region)
            }
            SimError::WeatherWindow { want0, want1, have0, have1 } => {
                ToolError::new(ErrorCode::TemporalWindowError, message)
                    .with("arg", "time_range")
                    .with("requested", [want0, want1])
                    .with("available", [have0, have1])
            }
            SimError::BadRange(..) | SimError::BadWindow(..) | SimError::BadMagnitude(_) => {
                ToolError::new(ErrorCode::ArgumentError, message)
            }
        }
    }
}

fn parse_intervention(args: &Args, required: bool) -> Result<Option<Intervention>, ToolError> {
    match args.get("intervention") {
        Some(v) => {
            let iv: Intervention = serde_json::from_value(v.clone()).map_err(|e| {
                bad_arg(
                    "intervention",
                    format!("intervention must be {{action, magnitude, window}}: {e}"),
                )
            })?;
            Ok(Some(iv))
        }
        None if required => Err(bad_arg("intervention", "intervention is required")),
        None => Ok(None),
    }
}

pub(super) fn run(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let parcel = get_str(args, "parcel")?;
    let intervention = parse_intervention(args, false)?;
    let result = sim::run(ctx.world, parcel, intervention.as_ref())?;
    let per_day: Vec<Value> = result
        .per_day
        .iter()
        .map(|d| json!({"et_mm": d.et_mm, "soil_water_mm": d.soil_water_mm, "stress": d.stress, "t": d.t}))
        .collect();
    let value = json!({
        "parcel_id": parcel,
        "per_day": per_day,
        "stress_index": result.stress_index,
        "trace_prov": result.trace_prov,
        "unit": "dimensionless",
        "warnings": result.warnings,
        "yield": {"unit": result.yield_estimate.unit, "value": result.yield_estimate.value},
    });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Table,
        meta: ArtifactMeta {
            unit: Some(Unit::Dimensionless),
            t_range: Some(ctx.world.season),
            ..Default::default()
        },
    })
}

pub(super) fn delta(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let parcel = get_str(args, "parcel")?;
    let intervention = parse_intervention(args, true)?.expect("required");
    let target = match args.get("target").and_then(Value::as_str) {
        None | Some("stress_index") => DeltaTarget::StressIndex,
        Some("yield") => DeltaTarget::Yield,
        Some(other) => {
            return Err(bad_arg("target", format!("unknown delta target {other:?}"))
                .with("valid", ["stress_index", "yield"]))
        }
    };
    let outcome = sim::delta(ctx.world, parcel, &intervention, target)?;
    let unit = match target {
        DeltaTarget::StressIndex => Unit::Dimensionless,
        DeltaTarget::Yield => Unit::KgPerHa,
    };
    let value = json!({
        "baseline_prov": outcome.baseline.trace_prov,
        "delta": outcome.delta,
        "intervened_prov": outcome.intervened.trace_prov,
        "intervention": intervention,
        "parcel_id": parcel,
        "target": target,
        "unit": unit,
        "value": outcome.delta,
    });
    Ok(ToolOutput { value, kind: ArtifactKind::Scalar, meta: ArtifactMeta::unit(unit) })
}

pub(super) fn stress(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let parcel = get_str(args, "parcel")?;
    let range = get_int_pair(args, "time_range")?;
    let stress = sim::predict_stress(ctx.world, parcel, range)?;
    let value = json!({ "parcel_id": parcel, "unit": "dimensionless", "value": stress });
    Ok(ToolOutput { value, kind: ArtifactKind::Scalar, meta: ArtifactMeta::unit(Unit::Dimensionless) })
}

pub(super) fn yield_forecast(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let parcel = get_str(args, "parcel")?;
    let forecast = sim::predict_yield(ctx.world, parcel)?;
    let value = json!({ "parcel_id": parcel, "unit": forecast.unit, "value": forecast.value });
    Ok(ToolOutput { value, kind: ArtifactKind::Scalar, meta: ArtifactMeta::unit(forecast.unit) })
}

pub(super) fn disease(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let parcel = get_str(args, "parcel")?;
    let range = get_int_pair(args, "time_range")?;
    let risk = sim::predict_disease(ctx.world, parcel, range)?;
    let value = json!({ "parcel_id": parcel, "unit": "dimensionless", "value": risk });
    Ok(ToolOutput { value, kind: ArtifactKind::Scalar, meta: ArtifactMeta::unit(Unit::Dimensionless) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::tiny_world;
    use crate::toolkit::{Registry, ToolCall};

    fn call(tool: &str, args: Value) -> ToolCall {
        let map = match args {
            Value::Object(m) => m.into_iter().collect(),
            _ => unreachable!(),
        };
        ToolCall { tool: tool.into(), args: map }
    }

    #[test]
    fn sim_run_payload_shape() {
        let world = tiny_world();
        let (v, _) = Registry::full()
            .invoke(&world, &call("sim.run", json!({"parcel": "p1"})))
            .unwrap();
        assert_eq!(v["per_day"].as_array().unwrap().len(), 30);
        assert!(v["yield"]["value"].as_f64().unwrap() > 0.0);
        assert_eq!(v["yield"]["unit"], json!("kg_per_ha"));
    }

    #[test]
    fn sim_delta_echoes_intervention() {
        let world = tiny_world();
        let iv = json!({
            "action": "irrigation_delta",
            "magnitude": {"unit": "mm_per_day", "value": 2.0},
            "window": [5, 20]
        });
        let (v, artifact) = Registry::full()
            .invoke(&world, &call("sim.delta", json!({"parcel": "p1", "intervention": iv})))
            .unwrap();
        assert_eq!(v["intervention"]["magnitude"]["value"], json!(2.0));
        assert!(v["delta"].as_f64().unwrap() <= 0.0);
        assert_ne!(v["baseline_prov"], v["intervened_prov"]);
        assert_eq!(artifact.meta.unit, Some(Unit::Dimensionless));
    }

    #[test]
    fn predictors_via_registry() {
        let world = tiny_world();
        let reg = Registry::full();
        let (v, _) = reg
            .invoke(&world, &call("pred.stress", json!({"parcel": "p1", "time_range": [0, 29]})))
            .unwrap();
        let s = v["value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&s));
        let (v, _) = reg.invoke(&world, &call("pred.yield", json!({"parcel": "p1"}))).unwrap();
        assert_eq!(v["unit"], json!("kg_per_ha"));
        let err = reg
            .invoke(&world, &call("pred.stress", json!({"parcel": "p1", "time_range": [10, 5]})))
            .unwrap_err();
        assert_eq!(err.code, ErrorCode::ArgumentError);
    }
}
