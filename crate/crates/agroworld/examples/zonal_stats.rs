//! Aligned zonal statistics over a cloudy raster: the CRS check, the explicit
//! reprojection step, and the validity-ratio gate.

use agroworld::bench::{gen_world, GenConfig};
use agroworld::toolkit::{ErrorCode, Registry, ToolCall};
use serde_json::{json, Value};

fn call(tool: &str, args: Value) -> ToolCall {
    let map = match args {
        Value::Object(m) => m.into_iter().collect(),
        _ => unreachable!(),
    };
    ToolCall { tool: tool.into(), args: map }
}

fn main() {
    let world = gen_world(&GenConfig { n_parcels: 12, ..GenConfig::with_seed(7) });
    let registry = Registry::full();
    let parcel = world.parcels.values().find(|p| p.crop_type.is_some()).unwrap();
    println!("parcel {} in {}", parcel.id, parcel.geometry.crs);

    let (view, _) = registry
        .invoke(&world, &call("rs.load", json!({"band": "ndvi", "time_range": [30, 40]})))
        .expect("raster view");
    println!("raster view: {}", view);

    // Feeding GEO parcels to a metric raster is a loud, typed failure.
    let err = registry
        .invoke(
            &world,
            &call(
                "rs.zonal_stats",
                json!({"raster": view, "zones": [parcel.id], "stat": "mean"}),
            ),
        )
        .unwrap_err();
    assert_eq!(err.code, ErrorCode::SpatialMisalignment);
    println!("\nwithout alignment: {err}");
    println!("  details: {}", err.details);

    // The fix is one explicit reprojection step.
    let (zones, _) = registry
        .invoke(
            &world,
            &call("geo.reproject", json!({"parcels": [parcel.id], "to": view["crs"]})),
        )
        .expect("reproject");
    let (stats, artifact) = registry
        .invoke(
            &world,
            &call(
                "rs.zonal_stats",
                json!({"raster": view, "zones": zones["zones"], "stat": "mean"}),
            ),
        )
        .expect("zonal stats");
    println!("\naligned zonal means for {}:", parcel.id);
    for row in stats["rows"][&parcel.id].as_array().unwrap() {
        println!("  day {:>3}  ndvi {:.4}", row[0], row[1].as_f64().unwrap());
    }
    println!(
        "minimum validity ratio {:.3} (gate at 0.3), provenance {}",
        artifact.meta.validity_ratio.unwrap(),
        &artifact.prov[..12]
    );
}
