//! Zone resolution: the shared argument form for parcel-shaped inputs.
//!
//! Zone-consuming tools accept either bare parcel ids (`["p1", "p2"]`),
//! resolved against the world in their native CRS, or inline zone objects
//! (`[{"parcel_id": ..., "polygon": ...}]`) as produced by `geo.reproject`.

use super::args::bad_arg;
use super::{Args, ErrorCode, ToolError};
use crate::geometry::Polygon;
use crate::model::WorldState;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub parcel_id: String,
    pub polygon: Polygon,
}

pub(crate) fn resolve_zones(world: &WorldState, args: &Args, name: &str) -> Result<Vec<Zone>, ToolError> {
    let raw = args
        .get(name)
        .and_then(Value::as_array)
        .ok_or_else(|| bad_arg(name, format!("argument {name:?} must be a list")))?;
    let mut zones = Vec::with_capacity(raw.len());
    for item in raw {
        match item {
            Value::String(id) => {
                let parcel = world.parcels.get(id).ok_or_else(|| {
                    ToolError::new(ErrorCode::ArgumentError, format!("unknown parcel {id:?}"))
                        .with("arg", name)
                        .with("valid", world.parcels.keys().collect::<Vec<_>>())
                })?;
                zones.push(Zone { parcel_id: parcel.id.clone(), polygon: parcel.geometry.clone() });
            }
            Value::Object(_) => {
                let zone: Zone = serde_json::from_value(item.clone()).map_err(|e| {
                    bad_arg(name, format!("zone objects in {name:?} must be {{parcel_id, polygon}}: {e}"))
                })?;
                zones.push(zone);
            }
            _ => {
                return Err(bad_arg(
                    name,
                    format!("entries of {name:?} must be parcel ids or zone objects"),
                ))
            }
        }
    }
    Ok(zones)
}
