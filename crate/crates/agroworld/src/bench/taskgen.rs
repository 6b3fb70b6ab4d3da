//! Four-family task generation with sealed, pre-verified references.
//!
//! Every emitted task ships a reference plan whose answer passes the task's
//! own checker — enforced here by executing the plan and grading it before
//! the task is accepted. Candidates whose reference run fails (for instance a
//! cloudy window tripping the coverage gate, or an unstressed parcel with no
//! feasible intervention) are resampled, up to a bounded number of attempts.

use super::rng::{fnv64, SplitMix64};
use super::worldgen::{GenConfig, BASELINE_FRACTION, NDVI_BAND, SOIL_GRID_ID};
use crate::agent::plan::{PlanProgram, PlanStep};
use crate::align::{AlignmentPolicy, Extrapolation, Interp};
use crate::model::{Parcel, RasterTimeSeries, WorldState};
use crate::protocol::{
    checker, run_reference, Bindings, CheckerConfig, CounterfactualCheck, FieldKind, FieldSpec,
    MaskSet, NumericCheck, OutputSchema, PhysicalCheck, SpatialCheck, TaskFamily, TaskInstance,
};
use crate::sim::{self, DeltaTarget, Intervention};
use crate::toolkit::{rs_tools::zone_pixels, ErrorCode, Registry, ToolError};
use crate::units::{Quantity, Unit};
use serde_json::{json, Value};
use std::collections::BTreeMap;

const MAX_ATTEMPTS: usize = 100;
const DEFAULT_BUDGET: u32 = 20;
const ZSCORE_THRESHOLD: f64 = 2.5;
const MIN_IOU: f64 = 0.5;
const MAX_IRRIGATION_MM_PER_DAY: f64 = 6.0;
const SWEEP_POINTS: usize = 21;

pub fn gen_tasks(
    world: &WorldState,
    cfg: &GenConfig,
    task_seed: u64,
) -> Result<Vec<TaskInstance>, ToolError> {
    let registry = Registry::full();
    let mut tasks = Vec::new();
    for family in crate::protocol::ALL_FAMILIES {
        if !cfg.families.contains(&family) {
            continue;
        }
        let mut rng = SplitMix64::new(task_seed ^ fnv64(family.name()));
        for index in 0..cfg.tasks_per_family {
            let task = gen_one(world, &registry, family, index, &mut rng).ok_or_else(|| {
                ToolError::new(
                    ErrorCode::GenerationExhausted,
                    format!(
                        "family {} could not produce a valid task in {MAX_ATTEMPTS} attempts",
                        family.name()
                    ),
                )
                .with("family", family.name())
            })?;
            tasks.push(task);
        }
    }
    Ok(tasks)
}

fn gen_one(
    world: &WorldState,
    registry: &Registry,
    family: TaskFamily,
    index: usize,
    rng: &mut SplitMix64,
) -> Option<TaskInstance> {
    for _ in 0..MAX_ATTEMPTS {
        let candidate = match family {
            TaskFamily::Lookup => lookup_candidate(world, index, rng),
            TaskFamily::Forecast => forecast_candidate(world, index, rng),
            TaskFamily::Anomaly => anomaly_candidate(world, index, rng),
            TaskFamily::Counterfactual => counterfactual_candidate(world, index, rng),
        };
        let Some(candidate) = candidate else { continue };
        let Ok((answer, artifacts)) = run_reference(registry, &candidate, world) else { continue };
        let task = match seal_reference(candidate, &answer) {
            Some(task) => task,
            None => continue,
        };
        if checker::check(&answer, &artifacts, &task, world).pass() {
            return Some(task);
        }
    }
    None
}

/// Freeze the reference run's numeric answer into the checker as `y*`.
fn seal_reference(mut task: TaskInstance, answer: &Value) -> Option<TaskInstance> {
    if let Some(numeric) = &mut task.checker.numeric {
        let value = answer.get(&numeric.key)?.as_f64()?;
        let unit = numeric.reference.unit;
        numeric.reference = Quantity::new(value, unit).ok()?;
    }
    Some(task)
}

fn step(id: &str, tool: &str, args: Value) -> PlanStep {
    let map: BTreeMap<String, Value> = match args {
        Value::Object(m) => m.into_iter().collect(),
        _ => unreachable!("step args are always objects"),
    };
    PlanStep { id: id.into(), tool: tool.into(), args: map }
}

fn crop_parcels(world: &WorldState) -> Vec<&Parcel> {
    world.parcels.values().filter(|p| p.crop_type.is_some()).collect()
}

fn ndvi_raster(world: &WorldState) -> &RasterTimeSeries {
    &world.rasters[NDVI_BAND]
}

fn alignment_policy(world: &WorldState) -> AlignmentPolicy {
    AlignmentPolicy::new(ndvi_raster(world).crs, Interp::Linear, Extrapolation::Hold)
}

fn base_bindings(world: &WorldState, parcel: &Parcel) -> Bindings {
    Bindings {
        world_id: world.world_id.clone(),
        season: world.season,
        parcel_ids: vec![parcel.id.clone()],
        time_range: None,
        band: None,
        region: Some(parcel.region_id.clone()),
        thresholds: BTreeMap::new(),
    }
}

fn scalar_schema(parcel_id: &str, unit: Unit) -> OutputSchema {
    OutputSchema {
        required: vec![
            FieldSpec::new("parcel_id", FieldKind::String).with_allowed(vec![json!(parcel_id)]),
            FieldSpec::new("value", FieldKind::Number),
            FieldSpec::new("unit", FieldKind::String).with_unit(unit),
        ],
    }
}

fn lookup_candidate(world: &WorldState, index: usize, rng: &mut SplitMix64) -> Option<TaskInstance> {
    let parcels = crop_parcels(world);
    let parcel = *rng.pick(&parcels);
    let crs = ndvi_raster(world).crs;
    let n = world.season_days();

    // Alternate between a remote-sensing lookup and a static-grid lookup.
    let (q, steps, unit) = if index % 2 == 0 {
        let t0 = rng.range_i64(n / 6, n / 2);
        let t1 = t0 + rng.range_i64(8, 20);
        let q = format!(
            "What is the mean {NDVI_BAND} of parcel {} over days {t0}-{t1}?",
            parcel.id
        );
        let steps = vec![
            step("s1", "rs.load", json!({"band": NDVI_BAND, "time_range": [t0, t1]})),
            step("s2", "geo.reproject", json!({"parcels": [parcel.id], "to": crs})),
            step(
                "s3",
                "rs.zonal_stats",
                json!({"raster": {"ref": "s1"}, "zones": {"ref": "s2", "path": "zones"}, "stat": "mean"}),
            ),
            step("s4", "tbl.row", json!({"table": {"ref": "s3"}, "key": parcel.id})),
            step("s5", "series.mean", json!({"series": {"ref": "s4"}})),
        ];
        (q, steps, Unit::Dimensionless)
    } else {
        let q = format!("What is the soil water capacity of parcel {}?", parcel.id);
        let steps = vec![
            step("s1", "geo.reproject", json!({"parcels": [parcel.id], "to": crs})),
            step(
                "s2",
                "grid.sample",
                json!({"grid": SOIL_GRID_ID, "zones": {"ref": "s1", "path": "zones"}}),
            ),
            step("s3", "tbl.pick", json!({"table": {"ref": "s2"}, "key": parcel.id})),
        ];
        (q, steps, Unit::Millimeter)
    };
    let last = steps.last().expect("non-empty").id.clone();
    let answer = json!({
        "parcel_id": parcel.id,
        "unit": unit,
        "value": {"ref": last, "path": "value"},
    });
    let mut bindings = base_bindings(world, parcel);
    if index % 2 == 0 {
        bindings.band = Some(NDVI_BAND.to_string());
        if let Some(ts) = steps[0].args.get("time_range") {
            bindings.time_range = serde_json::from_value(ts.clone()).ok();
        }
    }
    Some(TaskInstance {
        task_id: format!("lookup_{index:03}"),
        q,
        bindings,
        output_schema: scalar_schema(&parcel.id, unit),
        checker: CheckerConfig {
            numeric: Some(NumericCheck::new("value", Quantity { value: 0.0, unit })),
            counterfactual: None,
            spatial: None,
            physical: PhysicalCheck {
                tau_min: 0.3,
                required_units: [("value".to_string(), unit)].into_iter().collect(),
            },
        },
        budget: DEFAULT_BUDGET,
        family: TaskFamily::Lookup,
        alignment: alignment_policy(world),
        intervention: None,
        reference_plan: PlanProgram { steps, answer: Some(answer) },
    })
}

fn forecast_candidate(world: &WorldState, index: usize, rng: &mut SplitMix64) -> Option<TaskInstance> {
    let parcels = crop_parcels(world);
    let parcel = *rng.pick(&parcels);
    let n = world.season_days();
    let season_end = world.season[1];

    let (q, steps, unit) = if index % 2 == 0 {
        let q = format!("Forecast the end-of-season yield for parcel {}.", parcel.id);
        let steps = vec![step("s1", "pred.yield", json!({"parcel": parcel.id}))];
        (q, steps, Unit::KgPerHa)
    } else {
        let q = format!(
            "What are the cumulative growing degree days (base 10 degC) in region {} at season end?",
            parcel.region_id
        );
        let steps = vec![
            step(
                "s1",
                "wx.get",
                json!({"region": parcel.region_id, "time_range": [world.season[0], season_end], "var": "tmax_degC"}),
            ),
            step(
                "s2",
                "wx.get",
                json!({"region": parcel.region_id, "time_range": [world.season[0], season_end], "var": "tmin_degC"}),
            ),
            step(
                "s3",
                "wx.degree_days",
                json!({"tmax": {"ref": "s1"}, "tmin": {"ref": "s2"}, "t_base": 10.0}),
            ),
            step("s4", "series.pick", json!({"series": {"ref": "s3"}, "t": season_end})),
        ];
        (q, steps, Unit::DegCDay)
    };
    let _ = n;
    let last = steps.last().expect("non-empty").id.clone();
    let answer = json!({
        "parcel_id": parcel.id,
        "unit": unit,
        "value": {"ref": last, "path": "value"},
    });
    let mut bindings = base_bindings(world, parcel);
    bindings.time_range = Some(world.season);
    Some(TaskInstance {
        task_id: format!("forecast_{index:03}"),
        q,
        bindings,
        output_schema: scalar_schema(&parcel.id, unit),
        checker: CheckerConfig {
            numeric: Some(NumericCheck::new("value", Quantity { value: 0.0, unit })),
            counterfactual: None,
            spatial: None,
            physical: PhysicalCheck {
                tau_min: 0.3,
                required_units: [("value".to_string(), unit)].into_iter().collect(),
            },
        },
        budget: DEFAULT_BUDGET,
        family: TaskFamily::Forecast,
        alignment: alignment_policy(world),
        intervention: None,
        reference_plan: PlanProgram { steps, answer: Some(answer) },
    })
}

/// Zonal mean over all pixel centers, mask ignored — the generator-side view
/// of the clean signal that defines anomaly ground truth.
fn clean_zonal_mean(
    raster: &RasterTimeSeries,
    parcel: &Parcel,
    t0: i64,
    t1: i64,
) -> Option<Vec<(i64, f64)>> {
    let poly = crate::align::reproject_polygon(&parcel.geometry, raster.crs).ok()?;
    let pixels = zone_pixels(raster, &poly);
    if pixels.is_empty() {
        return None;
    }
    let band = raster.bands.get(NDVI_BAND)?;
    let mut out = Vec::new();
    for t in t0..=t1 {
        let t_idx = raster.time_index(t)?;
        let sum: f64 = pixels.iter().map(|&(r, c)| band[raster.index(t_idx, r, c)]).sum();
        out.push((t, sum / pixels.len() as f64));
    }
    Some(out)
}

/// Days whose z-score against the baseline window exceeds the threshold —
/// the same rule the anomaly tool applies, evaluated on the clean signal.
fn zscore_flags(series: &[(i64, f64)], b0: i64, b1: i64, threshold: f64) -> Vec<i64> {
    let baseline: Vec<f64> =
        series.iter().filter(|(t, _)| *t >= b0 && *t <= b1).map(|(_, v)| *v).collect();
    if baseline.len() < 2 {
        return Vec::new();
    }
    let mean = baseline.iter().sum::<f64>() / baseline.len() as f64;
    let std =
        (baseline.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / baseline.len() as f64).sqrt();
    series
        .iter()
        .filter(|(_, v)| {
            if std > 0.0 {
                ((v - mean) / std).abs() > threshold
            } else {
                *v != mean
            }
        })
        .map(|(t, _)| *t)
        .collect()
}

fn anomaly_candidate(world: &WorldState, index: usize, rng: &mut SplitMix64) -> Option<TaskInstance> {
    let parcels = crop_parcels(world);
    let parcel = *rng.pick(&parcels);
    let raster = ndvi_raster(world);
    let n = world.season_days();
    let b0 = (BASELINE_FRACTION.0 * n as f64).ceil() as i64;
    let b1 = (BASELINE_FRACTION.1 * n as f64).floor() as i64;
    let w1 = world.season[1] - 2;

    let clean = clean_zonal_mean(raster, parcel, b0, w1)?;
    let truth = zscore_flags(&clean, b0, b1, ZSCORE_THRESHOLD);
    // Two of three tasks target genuinely anomalous parcels; the rest keep
    // the "no anomaly" case honest (empty truth, both-empty IoU = 1).
    if index % 3 != 2 && truth.is_empty() {
        return None;
    }

    let q = format!(
        "Which days show anomalous {NDVI_BAND} for parcel {} (z-score > {ZSCORE_THRESHOLD} \
         against baseline days {b0}-{b1}, observed through day {w1})?",
        parcel.id
    );
    let steps = vec![
        step("s1", "rs.load", json!({"band": NDVI_BAND, "time_range": [b0, w1]})),
        step("s2", "geo.reproject", json!({"parcels": [parcel.id], "to": raster.crs})),
        step(
            "s3",
            "rs.zonal_stats",
            json!({"raster": {"ref": "s1"}, "zones": {"ref": "s2", "path": "zones"}, "stat": "mean"}),
        ),
        step("s4", "tbl.row", json!({"table": {"ref": "s3"}, "key": parcel.id})),
        step(
            "s5",
            "rs.anomaly",
            json!({"series": {"ref": "s4"}, "baseline_window": [b0, b1], "method": "zscore", "threshold": ZSCORE_THRESHOLD}),
        ),
    ];
    let answer = json!({
        "anomalies": {"ref": "s5", "path": "flagged"},
        "parcel_id": parcel.id,
    });
    let mut bindings = base_bindings(world, parcel);
    bindings.band = Some(NDVI_BAND.to_string());
    bindings.time_range = Some([b0, w1]);
    bindings.thresholds.insert("zscore".to_string(), ZSCORE_THRESHOLD);
    Some(TaskInstance {
        task_id: format!("anomaly_{index:03}"),
        q,
        bindings,
        output_schema: OutputSchema {
            required: vec![
                FieldSpec::new("parcel_id", FieldKind::String).with_allowed(vec![json!(parcel.id)]),
                FieldSpec::new("anomalies", FieldKind::Series),
            ],
        },
        checker: CheckerConfig {
            numeric: None,
            counterfactual: None,
            spatial: Some(SpatialCheck {
                key: "anomalies".to_string(),
                reference_mask: MaskSet::Days(truth),
                min_iou: MIN_IOU,
            }),
            physical: PhysicalCheck { tau_min: 0.3, required_units: BTreeMap::new() },
        },
        budget: DEFAULT_BUDGET,
        family: TaskFamily::Anomaly,
        alignment: alignment_policy(world),
        intervention: None,
        reference_plan: PlanProgram { steps, answer: Some(answer) },
    })
}

fn counterfactual_candidate(
    world: &WorldState,
    index: usize,
    rng: &mut SplitMix64,
) -> Option<TaskInstance> {
    let parcels = crop_parcels(world);
    let parcel = *rng.pick(&parcels);
    let n = world.season_days();
    let window = [world.season[0] + n / 3, world.season[0] + 2 * n / 3];
    let min_effect = (rng.range_f64(0.05, 0.10) * 100.0).round() / 100.0;

    // Feasibility sweep: the smallest magnitude on the grid that moves the
    // stress index by at least the required effect becomes the sealed
    // intervention. Monotonicity makes "smallest" well-defined.
    let mut sealed: Option<Intervention> = None;
    for k in 1..SWEEP_POINTS {
        let magnitude = MAX_IRRIGATION_MM_PER_DAY * k as f64 / (SWEEP_POINTS - 1) as f64;
        let candidate = Intervention::irrigation_delta(magnitude, window);
        let outcome = sim::delta(world, &parcel.id, &candidate, DeltaTarget::StressIndex).ok()?;
        if outcome.delta <= -min_effect {
            sealed = Some(candidate);
            break;
        }
    }
    let sealed = sealed?;

    let q = format!(
        "Propose a daily irrigation increase (at most {MAX_IRRIGATION_MM_PER_DAY} mm/day over days \
         {}-{}) that lowers parcel {}'s seasonal stress index by at least {min_effect}.",
        window[0], window[1], parcel.id
    );
    let steps = vec![step(
        "s1",
        "sim.delta",
        json!({"parcel": parcel.id, "intervention": sealed, "target": "stress_index"}),
    )];
    let answer = json!({
        "action": "irrigation_delta",
        "magnitude": {"ref": "s1", "path": "intervention.magnitude.value"},
        "parcel_id": parcel.id,
        "unit": "mm_per_day",
        "window_end": {"ref": "s1", "path": "intervention.window.1"},
        "window_start": {"ref": "s1", "path": "intervention.window.0"},
    });
    let mut bindings = base_bindings(world, parcel);
    bindings.time_range = Some(window);
    bindings.thresholds.insert("max_magnitude".to_string(), MAX_IRRIGATION_MM_PER_DAY);
    bindings.thresholds.insert("min_effect".to_string(), min_effect);
    Some(TaskInstance {
        task_id: format!("counterfactual_{index:03}"),
        q,
        bindings,
        output_schema: OutputSchema {
            required: vec![
                FieldSpec::new("parcel_id", FieldKind::String).with_allowed(vec![json!(parcel.id)]),
                FieldSpec::new("action", FieldKind::String)
                    .with_allowed(vec![json!("irrigation_delta")]),
                FieldSpec::new("magnitude", FieldKind::Number),
                FieldSpec::new("unit", FieldKind::String).with_unit(Unit::MmPerDay),
                FieldSpec::new("window_start", FieldKind::Number),
                FieldSpec::new("window_end", FieldKind::Number),
            ],
        },
        checker: CheckerConfig {
            numeric: None,
            counterfactual: Some(CounterfactualCheck {
                delta: min_effect,
                target: DeltaTarget::StressIndex,
            }),
            spatial: None,
            physical: PhysicalCheck {
                tau_min: 0.3,
                required_units: [("magnitude".to_string(), Unit::MmPerDay)].into_iter().collect(),
            },
        },
        budget: DEFAULT_BUDGET,
        family: TaskFamily::Counterfactual,
        alignment: alignment_policy(world),
        intervention: Some(sealed),
        reference_plan: PlanProgram { steps, answer: Some(answer) },
    })
}
