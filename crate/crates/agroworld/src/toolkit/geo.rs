//! Geospatial query tools.

use super::args::{bad_arg, get_opt_str};
use super::zones::{resolve_zones, Zone};
use super::{AlignmentMode, Args, ArtifactKind, ArtifactMeta, ErrorCode, ToolCtx, ToolError, ToolOutput};
use crate::align::reproject_polygon;
use crate::geometry::{overlaps_positively, Crs, Polygon};
use crate::model::{CropType, ALL_CROPS};
use serde_json::{json, Value};

fn known_region(ctx: &ToolCtx, region: &str) -> Result<(), ToolError> {
    let regions = ctx.world.regions();
    if regions.iter().any(|r| r == region) {
        Ok(())
    } else {
        Err(ToolError::new(ErrorCode::UnknownRegion, format!("unknown region {region:?}"))
            .with("arg", "region")
            .with("valid", regions))
    }
}

/// Parcel area in hectares, measured in a metric CRS anchored at the parcel's
/// own bounding-box latitude (deterministic per parcel).
fn area_ha(ctx: &ToolCtx, poly: &Polygon) -> Result<f64, ToolError> {
    let measured = match (ctx.alignment, poly.crs) {
        (AlignmentMode::Full, Crs::Geo) => {
            let lat0 = poly.anchor()[1];
            reproject_polygon(poly, Crs::metric(lat0))?
        }
        _ => poly.clone(),
    };
    Ok(measured.area() / 10_000.0)
}

pub(super) fn filter_parcels(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let region = get_opt_str(args, "region");
    if let Some(r) = region {
        known_region(ctx, r)?;
    }
    let crop = match get_opt_str(args, "crop") {
        Some(s) => Some(CropType::parse(s).ok_or_else(|| {
            bad_arg("crop", format!("unknown crop {s:?}"))
                .with("valid", ALL_CROPS.iter().map(|c| c.name()).collect::<Vec<_>>())
        })?),
        None => None,
    };
    let area_range = match args.get("area_range") {
        Some(Value::Array(a)) if a.len() == 2 => {
            let lo = a[0].as_f64().ok_or_else(|| bad_arg("area_range", "bounds must be numbers"))?;
            let hi = a[1].as_f64().ok_or_else(|| bad_arg("area_range", "bounds must be numbers"))?;
            Some((lo, hi))
        }
        Some(_) => return Err(bad_arg("area_range", "must be [lo, hi] in hectares")),
        None => None,
    };

    let mut ids = Vec::new();
    for parcel in ctx.world.parcels.values() {
        if let Some(r) = region {
            if parcel.region_id != r {
                continue;
            }
        }
        if let Some(c) = crop {
            if parcel.crop_type != Some(c) {
                continue;
            }
        }
        if let Some((lo, hi)) = area_range {
            let ha = area_ha(ctx, &parcel.geometry)?;
            if ha < lo || ha > hi {
                continue;
            }
        }
        ids.push(parcel.id.clone());
    }
    ids.sort();
    let value = json!({ "parcel_ids": ids });
    Ok(ToolOutput { value, kind: ArtifactKind::Table, meta: ArtifactMeta::default() })
}

/// Bring both geometries of a pair into a common metric CRS. When one side is
/// already metric that CRS wins; two GEO inputs meet in a metric CRS anchored
/// at their combined bounding-box latitude.
fn common_metric(a: &Polygon, b: &Polygon) -> Result<(Polygon, Polygon), ToolError> {
    if a.crs == b.crs {
        if let Crs::Metric { .. } = a.crs {
            return Ok((a.clone(), b.clone()));
        }
    }
    let target = match (a.crs, b.crs) {
        (Crs::Metric { lat0 }, _) => Crs::metric(lat0),
        (_, Crs::Metric { lat0 }) => Crs::metric(lat0),
        (Crs::Geo, Crs::Geo) => {
            let lat = (a.anchor()[1] + b.anchor()[1]) / 2.0;
            Crs::metric(lat)
        }
    };
    Ok((reproject_polygon(a, target)?, reproject_polygon(b, target)?))
}

pub(super) fn sjoin(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let left = resolve_zones(ctx.world, args, "left")?;
    let right = resolve_zones(ctx.world, args, "right")?;
    let auto_align = args.get("align").and_then(Value::as_bool).unwrap_or(true);

    let mut pairs: Vec<(String, String)> = Vec::new();
    for l in &left {
        for r in &right {
            let overlap = if ctx.alignment == AlignmentMode::Disabled {
                // Ablation: raw coordinates, no checks. Mismatched CRSs
                // silently compare degrees against meters.
                overlaps_positively(&l.polygon, &r.polygon)
            } else if auto_align {
                let (lp, rp) = common_metric(&l.polygon, &r.polygon)?;
                overlaps_positively(&lp, &rp)
            } else {
                ctx.ensure_aligned("right", &r.polygon.crs, &l.polygon.crs)?;
                overlaps_positively(&l.polygon, &r.polygon)
            };
            if overlap {
                pairs.push((l.parcel_id.clone(), r.parcel_id.clone()));
            }
        }
    }
    pairs.sort();
    pairs.dedup();
    let rows: Vec<Value> = pairs.iter().map(|(a, b)| json!([a, b])).collect();
    let value = json!({ "pairs": rows });
    Ok(ToolOutput { value, kind: ArtifactKind::Table, meta: ArtifactMeta::default() })
}

pub(super) fn reproject(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let zones = resolve_zones(ctx.world, args, "parcels")?;
    let target: Crs = serde_json::from_value(
        args.get("to").cloned().ok_or_else(|| bad_arg("to", "target CRS is required"))?,
    )
    .map_err(|e| bad_arg("to", format!("target CRS is malformed: {e}")))?;

    let mut out = Vec::with_capacity(zones.len());
    let mut crs = target;
    for zone in &zones {
        let polygon = match ctx.alignment {
            AlignmentMode::Full => reproject_polygon(&zone.polygon, target)?,
            // Identity alignment: geometry and CRS pass through untouched.
            AlignmentMode::Disabled => {
                crs = zone.polygon.crs;
                zone.polygon.clone()
            }
        };
        out.push(Zone { parcel_id: zone.parcel_id.clone(), polygon });
    }
    let value = json!({ "crs": crs, "zones": out });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Table,
        meta: ArtifactMeta { crs: Some(crs), ..Default::default() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::tiny_world;
    use crate::model::{Parcel, WorldState};
    use crate::toolkit::{Registry, ToolCall};
    use serde_json::json;
    use std::collections::BTreeMap;

    fn call(tool: &str, args: Value) -> ToolCall {
        let map = match args {
            Value::Object(m) => m.into_iter().collect(),
            _ => unreachable!(),
        };
        ToolCall { tool: tool.into(), args: map }
    }

    fn footprint(world: &mut WorldState, id: &str, min: [f64; 2], max: [f64; 2]) {
        world.parcels.insert(
            id.to_string(),
            Parcel {
                id: id.to_string(),
                geometry: Polygon::rect(min, max, Crs::Geo).unwrap(),
                crop_type: None,
                region_id: "r1".into(),
                attributes: BTreeMap::new(),
            },
        );
    }

    #[test]
    fn filter_no_predicates_returns_all() {
        let world = tiny_world();
        let (v, _) = Registry::full().invoke(&world, &call("geo.filter_parcels", json!({}))).unwrap();
        assert_eq!(v["parcel_ids"], json!(["p1", "p2"]));
    }

    #[test]
    fn filter_by_crop() {
        let world = tiny_world();
        let (v, _) = Registry::full()
            .invoke(&world, &call("geo.filter_parcels", json!({"crop": "maize"})))
            .unwrap();
        assert_eq!(v["parcel_ids"], json!(["p1"]));
    }

    #[test]
    fn filter_degenerate_area_range_is_empty() {
        let world = tiny_world();
        let (v, _) = Registry::full()
            .invoke(&world, &call("geo.filter_parcels", json!({"area_range": [0.0, 0.0]})))
            .unwrap();
        assert_eq!(v["parcel_ids"], json!([]));
    }

    #[test]
    fn filter_unknown_region() {
        let world = tiny_world();
        let err = Registry::full()
            .invoke(&world, &call("geo.filter_parcels", json!({"region": "mars"})))
            .unwrap_err();
        assert_eq!(err.code, ErrorCode::UnknownRegion);
        assert_eq!(err.detail("valid").unwrap(), &json!(["r1"]));
    }

    #[test]
    fn sjoin_self_pair_and_disjoint() {
        let world = tiny_world();
        let reg = Registry::full();
        let (v, _) = reg
            .invoke(&world, &call("geo.sjoin", json!({"left": ["p1"], "right": ["p1"]})))
            .unwrap();
        assert_eq!(v["pairs"], json!([["p1", "p1"]]));
        let (v, _) = reg
            .invoke(&world, &call("geo.sjoin", json!({"left": ["p1"], "right": ["p2"]})))
            .unwrap();
        assert_eq!(v["pairs"], json!([]));
    }

    #[test]
    fn sjoin_matches_brute_force_on_footprints() {
        let mut world = tiny_world();
        footprint(&mut world, "f1", [0.0005, 0.0005], [0.0060, 0.0060]); // overlaps p1 and p2
        footprint(&mut world, "f2", [0.0200, 0.0200], [0.0230, 0.0230]); // disjoint
        let parcels = vec!["p1".to_string(), "p2".to_string()];
        let feet = vec!["f1".to_string(), "f2".to_string()];
        let (v, _) = Registry::full()
            .invoke(&world, &call("geo.sjoin", json!({"left": parcels, "right": feet})))
            .unwrap();
        // Brute-force all-pairs oracle over the same membership predicate,
        // in a fixed shared metric frame.
        let mut expected = Vec::new();
        for l in &parcels {
            for r in &feet {
                let lp = reproject_polygon(&world.parcels[l].geometry, Crs::metric(0.0)).unwrap();
                let rp = reproject_polygon(&world.parcels[r].geometry, Crs::metric(0.0)).unwrap();
                if overlaps_positively(&lp, &rp) {
                    expected.push(json!([l, r]));
                }
            }
        }
        assert_eq!(v["pairs"], json!(expected));
        assert_eq!(v["pairs"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn sjoin_symmetry() {
        let mut world = tiny_world();
        footprint(&mut world, "f1", [0.002, 0.002], [0.006, 0.006]);
        let reg = Registry::full();
        let (ab, _) = reg
            .invoke(&world, &call("geo.sjoin", json!({"left": ["p1", "p2"], "right": ["f1"]})))
            .unwrap();
        let (ba, _) = reg
            .invoke(&world, &call("geo.sjoin", json!({"left": ["f1"], "right": ["p1", "p2"]})))
            .unwrap();
        let forward: Vec<(String, String)> = ab["pairs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| (p[0].as_str().unwrap().into(), p[1].as_str().unwrap().into()))
            .collect();
        let mut backward: Vec<(String, String)> = ba["pairs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| (p[1].as_str().unwrap().into(), p[0].as_str().unwrap().into()))
            .collect();
        backward.sort();
        assert_eq!(forward, backward);
    }

    #[test]
    fn sjoin_align_false_raises_on_mismatch() {
        let world = tiny_world();
        // Inline zone in metric CRS vs world parcels in GEO.
        let metric_zone = json!({
            "parcel_id": "z1",
            "polygon": Polygon::rect([0.0, 0.0], [500.0, 500.0], Crs::metric(0.0)).unwrap()
        });
        let err = Registry::full()
            .invoke(
                &world,
                &call("geo.sjoin", json!({"left": ["p1"], "right": [metric_zone], "align": false})),
            )
            .unwrap_err();
        assert_eq!(err.code, ErrorCode::SpatialMisalignment);
    }

    #[test]
    fn reproject_identity_in_disabled_mode() {
        let world = tiny_world();
        let target = json!({"kind": "metric", "lat0": 0.0});
        let (full, _) = Registry::full()
            .invoke(&world, &call("geo.reproject", json!({"parcels": ["p1"], "to": target})))
            .unwrap();
        assert_eq!(full["crs"], json!({"kind": "metric", "lat0": 0.0}));
        let (off, _) = Registry::without_alignment()
            .invoke(&world, &call("geo.reproject", json!({"parcels": ["p1"], "to": target})))
            .unwrap();
        assert_eq!(off["crs"], json!({"kind": "geo"}));
        assert_eq!(off["zones"][0]["polygon"]["crs"], json!({"kind": "geo"}));
    }
}
