//! Soil/terrain grid access.

use super::args::{bad_arg, get_str};
use super::zones::resolve_zones;
use super::{AlignmentMode, Args, ArtifactKind, ArtifactMeta, ErrorCode, ToolCtx, ToolError, ToolOutput};
use crate::align::reproject_polygon;
use crate::geometry::Polygon;
use crate::model::GridField;
use serde_json::{json, Map};
use std::collections::BTreeSet;

fn lookup_grid<'a>(ctx: &'a ToolCtx, id: &str) -> Result<&'a GridField, ToolError> {
    ctx.world.grids.get(id).ok_or_else(|| {
        bad_arg("grid", format!("unknown grid {id:?}"))
            .with("valid", ctx.world.grids.keys().collect::<Vec<_>>())
    })
}

/// Cells of the grid whose centers fall inside the polygon.
pub fn grid_cells(grid: &GridField, poly: &Polygon) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for row in 0..grid.height {
        for col in 0..grid.width {
            let c = grid.cell_center(row, col);
            if poly.contains(c[0], c[1]) {
                cells.push((row, col));
            }
        }
    }
    cells
}

pub(super) fn sample(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let grid = lookup_grid(ctx, get_str(args, "grid")?)?;
    let zones = resolve_zones(ctx.world, args, "zones")?;
    let mut rows = Map::new();
    for zone in &zones {
        ctx.ensure_aligned("zones", &zone.polygon.crs, &grid.crs)?;
        let cells = grid_cells(grid, &zone.polygon);
        if cells.is_empty() {
            return Err(ToolError::new(
                ErrorCode::EmptyZone,
                format!("no grid cell centers fall inside parcel {:?}", zone.parcel_id),
            )
            .with("parcel_id", &zone.parcel_id));
        }
        let sum: f64 = cells.iter().map(|&(r, c)| grid.values[grid.index(r, c)]).sum();
        rows.insert(zone.parcel_id.clone(), json!(sum / cells.len() as f64));
    }
    let value = json!({ "rows": rows, "unit": grid.unit });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Table,
        meta: ArtifactMeta {
            unit: Some(grid.unit),
            crs: Some(grid.crs),
            resolution: Some(grid.pixel_size),
            ..Default::default()
        },
    })
}

pub(super) fn aggregate(ctx: &ToolCtx, args: &Args) -> Result<ToolOutput, ToolError> {
    let grid = lookup_grid(ctx, get_str(args, "grid")?)?;
    let region = get_str(args, "region")?;
    let regions = ctx.world.regions();
    if !regions.iter().any(|r| r == region) {
        return Err(ToolError::new(ErrorCode::UnknownRegion, format!("unknown region {region:?}"))
            .with("arg", "region")
            .with("valid", regions));
    }
    // Union of the region's parcels: cells deduplicated across parcels. This
    // tool is composite (region → geometries come from the world), so it
    // auto-aligns them to the grid CRS in full mode.
    let mut cells: BTreeSet<(usize, usize)> = BTreeSet::new();
    for parcel in ctx.world.parcels.values().filter(|p| p.region_id == region) {
        let poly = match ctx.alignment {
            AlignmentMode::Full => reproject_polygon(&parcel.geometry, grid.crs)?,
            AlignmentMode::Disabled => parcel.geometry.clone(),
        };
        cells.extend(grid_cells(grid, &poly));
    }
    if cells.is_empty() {
        return Err(ToolError::new(
            ErrorCode::EmptyZone,
            format!("no grid cell centers fall inside region {region:?}"),
        )
        .with("region", region));
    }
    let sum: f64 = cells.iter().map(|&(r, c)| grid.values[grid.index(r, c)]).sum();
    let value = json!({ "unit": grid.unit, "value": sum / cells.len() as f64 });
    Ok(ToolOutput {
        value,
        kind: ArtifactKind::Scalar,
        meta: ArtifactMeta { unit: Some(grid.unit), crs: Some(grid.crs), ..Default::default() },
    })
}
