//! World bundle persistence.
//!
//! A bundle is a directory with a `world.json` (everything except raster
//! payloads, records sorted by id) and one `raster_<id>.json` per raster time
//! series. All files are canonical JSON, so saving a loaded world reproduces
//! the input byte for byte.

use super::{GridField, ManagementLog, Parcel, RasterTimeSeries, WeatherStream, WorldError, WorldState};
use crate::canonical;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct WorldDoc {
    world_id: String,
    season: [i64; 2],
    parcels: Vec<Parcel>,
    grids: Vec<GridField>,
    weather: Vec<WeatherStream>,
    logs: Vec<ManagementLog>,
    rasters: Vec<String>,
}

fn io_err(path: &Path, source: std::io::Error) -> WorldError {
    WorldError::Io { path: path.display().to_string(), source }
}

/// Write a validated world to a bundle directory (created if missing).
pub fn save_world(world: &WorldState, dir: &Path) -> Result<(), WorldError> {
    world.validate()?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let doc = WorldDoc {
        world_id: world.world_id.clone(),
        season: world.season,
        parcels: world.parcels.values().cloned().collect(),
        grids: world.grids.values().cloned().collect(),
        weather: world.weather.values().cloned().collect(),
        logs: world.logs.values().cloned().collect(),
        rasters: world.rasters.keys().cloned().collect(),
    };
    let world_path = dir.join("world.json");
    fs::write(&world_path, canonical::to_string(&doc)).map_err(|e| io_err(&world_path, e))?;
    for (id, raster) in &world.rasters {
        let raster_path = dir.join(format!("raster_{id}.json"));
        fs::write(&raster_path, canonical::to_string(raster)).map_err(|e| io_err(&raster_path, e))?;
    }
    Ok(())
}

/// Load and validate a bundle directory.
pub fn load_world(dir: &Path) -> Result<WorldState, WorldError> {
    let world_path = dir.join("world.json");
    let text = fs::read_to_string(&world_path).map_err(|e| io_err(&world_path, e))?;
    let doc: WorldDoc = serde_json::from_str(&text)
        .map_err(|e| WorldError::BundleFormat(format!("{}: {e}", world_path.display())))?;

    let mut rasters = BTreeMap::new();
    for id in &doc.rasters {
        let raster_path = dir.join(format!("raster_{id}.json"));
        let text = fs::read_to_string(&raster_path).map_err(|e| io_err(&raster_path, e))?;
        let raster: RasterTimeSeries = serde_json::from_str(&text)
            .map_err(|e| WorldError::BundleFormat(format!("{}: {e}", raster_path.display())))?;
        if &raster.id != id {
            return Err(WorldError::BundleFormat(format!(
                "raster file {id} declares id {:?}",
                raster.id
            )));
        }
        rasters.insert(raster.id.clone(), raster);
    }

    let mut parcels = BTreeMap::new();
    for p in doc.parcels {
        if parcels.insert(p.id.clone(), p).is_some() {
            return Err(WorldError::BundleFormat("duplicate parcel id".into()));
        }
    }
    let mut grids = BTreeMap::new();
    for g in doc.grids {
        if grids.insert(g.id.clone(), g).is_some() {
            return Err(WorldError::BundleFormat("duplicate grid id".into()));
        }
    }
    let mut weather = BTreeMap::new();
    for w in doc.weather {
        if weather.insert(w.id.clone(), w).is_some() {
            return Err(WorldError::BundleFormat("duplicate weather id".into()));
        }
    }
    let mut logs = BTreeMap::new();
    for l in doc.logs {
        if logs.insert(l.parcel_id.clone(), l).is_some() {
            return Err(WorldError::BundleFormat("duplicate log parcel_id".into()));
        }
    }

    let world = WorldState {
        world_id: doc.world_id,
        season: doc.season,
        parcels,
        rasters,
        grids,
        weather,
        logs,
    };
    world.validate()?;
    Ok(world)
}
