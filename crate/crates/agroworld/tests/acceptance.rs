//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//!  1. Oracle soundness: scripted policy solves a full 4x50 task set in one
//!     turn each, well under the time budget.
//!  2. Zonal oracle equivalence over 200 randomized triples, including the
//!     worked 3x3 case (mean 5.0, validity 5/9).
//!  3. Coverage gate: every sub-threshold validity ratio raises; no mean is
//!     ever computed below the gate.
//!  4. Fault inversion: reflective runs repair injected faults (>= 0.95
//!     accuracy, bounded extra turns); one-shot runs fail the same tasks.
//!  5. Ablation ordering across seeds: full beats one-shot, no-alignment,
//!     and no-remote-sensing.
//!  6. Counterfactual checker: sealed interventions meet the effect bound;
//!     the null intervention moves nothing and never passes.
//!  7. Simulator properties: irrigation monotonicity, step-wise water
//!     conservation, bounds, and a hand-traced 30-day recurrence.
//!  8. Metric worked cases: NRMSE 1/3, IoU 1/7, exact identity/disjoint.
//!  9. Provenance determinism: byte-identical stores and traces across two
//!     runs; any parameter change alters the digest.
//! 10. Early stop: no plan is proposed after the first passing turn.

mod common;

use agroworld::agent::{run_episode, EpisodeConfig, FaultSpec, FaultyPolicy, ScriptedPolicy};
use agroworld::bench::{
    ablate, gen_tasks, gen_world, run_bench, GenConfig, PolicySpec, RunOptions, RunReport, Variant,
};
use agroworld::geometry::{Crs, Polygon};
use agroworld::model::{
    GridField, GridLayer, ManagementAction, ManagementEvent, ManagementLog, Parcel, WeatherRecord,
    WeatherStream, WorldState,
};
use agroworld::protocol::metrics::{iou, nrmse, MaskGrid};
use agroworld::protocol::{checker, TaskFamily, TaskInstance};
use agroworld::sim::{self, DeltaTarget, Intervention};
use agroworld::toolkit::{ArtifactStore, Registry, ToolCall};
use agroworld::units::{Quantity, Unit};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

fn full_scale_fixture() -> (WorldState, Vec<TaskInstance>) {
    let cfg = GenConfig { n_parcels: 50, tasks_per_family: 50, ..GenConfig::with_seed(42) };
    let world = gen_world(&cfg);
    let tasks = gen_tasks(&world, &cfg, cfg.seed).expect("generation succeeds");
    (world, tasks)
}

fn run_policy(
    world: &WorldState,
    tasks: &[TaskInstance],
    spec: &str,
    budget: u32,
    artifacts: Option<&Path>,
) -> RunReport {
    let registry = Registry::full();
    let policy = PolicySpec::parse(spec).unwrap().build(&registry).unwrap();
    run_bench(
        &registry,
        world,
        tasks,
        policy.as_ref(),
        RunOptions { t_max: budget, workers: 4, oracle_feedback: false },
        artifacts,
    )
    .unwrap()
}

#[test]
fn criterion_01_oracle_soundness() {
    let started = Instant::now();
    let (world, tasks) = full_scale_fixture();
    assert_eq!(tasks.len(), 200);
    let report = run_policy(&world, &tasks, "scripted", 1, None);
    let agg = report.aggregates.expect("non-empty run");
    assert_eq!(agg.overall_accuracy, 1.0, "scripted accuracy must be exact");
    assert_eq!(agg.mean_turns, 1.0);
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "pipeline took {elapsed:.1}s");
    println!(
        "[PASS] 1. oracle soundness: 200/200 scripted tasks solved in 1 turn ({elapsed:.1}s)"
    );
}

#[test]
fn criterion_02_zonal_oracle_equivalence() {
    common::worked_three_by_three();
    let stats = common::zonal_brute_force_suite(200, 0xA5A5);
    assert!(stats.clean_days > 100);
    println!(
        "[PASS] 2. zonal oracle equivalence: {} clean days exact, worked 3x3 case exact",
        stats.clean_days
    );
}

#[test]
fn criterion_03_coverage_gate() {
    let stats = common::zonal_brute_force_suite(200, 0x5A5A);
    assert!(stats.gate_trips > 10, "suite must exercise the gate");
    println!(
        "[PASS] 3. coverage gate: {} low-coverage cases raised, zero means computed below the gate",
        stats.gate_trips
    );
}

#[test]
fn criterion_04_fault_inversion() {
    let (world, tasks) = full_scale_fixture();
    let reflective = run_policy(&world, &tasks, "faulty:mixed", 20, None);
    let one_shot = run_policy(&world, &tasks, "faulty:mixed", 1, None);

    let agg = reflective.aggregates.as_ref().unwrap();
    assert!(agg.overall_accuracy >= 0.95, "reflective accuracy {}", agg.overall_accuracy);
    assert!(agg.mean_turns <= 4.0, "mean turns {}", agg.mean_turns);

    let fault_bearing = |report: &RunReport| -> (usize, usize) {
        let rows: Vec<_> = report.per_task.iter().filter(|r| r.fault.is_some()).collect();
        (rows.iter().filter(|r| r.z == 1).count(), rows.len())
    };
    let (refl_hits, refl_total) = fault_bearing(&reflective);
    let (shot_hits, shot_total) = fault_bearing(&one_shot);
    assert_eq!(refl_total, shot_total);
    assert!(refl_total >= 150, "most tasks should carry a fault, got {refl_total}");
    let refl_acc = refl_hits as f64 / refl_total as f64;
    let shot_acc = shot_hits as f64 / shot_total as f64;
    assert!(shot_acc <= 0.05, "one-shot accuracy on faulted tasks {shot_acc}");
    assert!(refl_acc - shot_acc >= 0.90, "gap {}", refl_acc - shot_acc);
    println!(
        "[PASS] 4. fault inversion: reflective {refl_acc:.3} vs one-shot {shot_acc:.3} \
         on {refl_total} fault-bearing tasks (mean turns {:.2})",
        agg.mean_turns
    );
}

#[test]
fn criterion_05_ablation_ordering() {
    for seed in [7u64, 42, 1337] {
        let cfg = GenConfig { n_parcels: 20, tasks_per_family: 10, ..GenConfig::with_seed(seed) };
        let world = gen_world(&cfg);
        let tasks = gen_tasks(&world, &cfg, cfg.seed).unwrap();
        let table = ablate(
            &world,
            &tasks,
            &[Variant::Full, Variant::OneShot, Variant::NoAlignment, Variant::NoRs],
            &PolicySpec::Faulty(FaultSpec::Mixed),
            RunOptions { t_max: 20, workers: 4, oracle_feedback: false },
        )
        .unwrap();
        let acc = |v: Variant| {
            table
                .variants
                .iter()
                .find(|row| row.variant == v)
                .map(|row| row.accuracy)
                .unwrap()
        };
        let full = acc(Variant::Full);
        for degraded in [Variant::OneShot, Variant::NoAlignment, Variant::NoRs] {
            assert!(
                full > acc(degraded),
                "seed {seed}: full {full} not above {} {}",
                degraded.name(),
                acc(degraded)
            );
        }
    }
    println!("[PASS] 5. ablation ordering holds for seeds 7, 42, 1337");
}

#[test]
fn criterion_06_counterfactual_checker() {
    let (world, tasks) = full_scale_fixture();
    let cf_tasks: Vec<_> =
        tasks.iter().filter(|t| t.family == TaskFamily::Counterfactual).collect();
    assert_eq!(cf_tasks.len(), 50);
    for task in &cf_tasks {
        let parcel = &task.bindings.parcel_ids[0];
        let sealed = task.intervention.as_ref().expect("sealed intervention");
        let required = task.checker.counterfactual.as_ref().unwrap().delta;
        let outcome = sim::delta(&world, parcel, sealed, DeltaTarget::StressIndex).unwrap();
        assert!(
            outcome.delta <= -required,
            "{}: sealed delta {} misses -{}",
            task.task_id,
            outcome.delta,
            required
        );

        // Null intervention: exactly zero effect, fails any positive bound.
        let null = Intervention::irrigation_delta(0.0, sealed.window);
        let null_outcome = sim::delta(&world, parcel, &null, DeltaTarget::StressIndex).unwrap();
        assert_eq!(null_outcome.delta, 0.0);
        for delta_bound in [required, 1e-9] {
            let mut strict = (*task).clone();
            strict.checker.counterfactual.as_mut().unwrap().delta = delta_bound;
            let answer = json!({
                "action": "irrigation_delta",
                "magnitude": 0.0,
                "parcel_id": parcel,
                "unit": "mm_per_day",
                "window_end": sealed.window[1],
                "window_start": sealed.window[0],
            });
            let report = checker::check(&answer, &[], &strict, &world);
            assert!(!report.pass(), "{}: null intervention passed", task.task_id);
        }
    }
    println!(
        "[PASS] 6. counterfactual checker: {} sealed interventions meet their bound; null fails",
        cf_tasks.len()
    );
}

fn hand_world() -> WorldState {
    let crs = Crs::metric(0.0);
    let parcel = Parcel {
        id: "p1".into(),
        geometry: Polygon::rect([0.001, 0.001], [0.004, 0.004], Crs::Geo).unwrap(),
        crop_type: Some(agroworld::model::CropType::Maize),
        region_id: "r1".into(),
        attributes: BTreeMap::new(),
    };
    let grid = GridField {
        id: "soil_water_capacity".into(),
        crs,
        origin: [0.0, 0.0],
        pixel_size: [111.2, 111.2],
        width: 10,
        height: 10,
        values: vec![120.0; 100],
        unit: Unit::Millimeter,
        name: GridLayer::SoilWaterCapacity,
    };
    let records = (0..30)
        .map(|t| WeatherRecord {
            t,
            precip_mm: if t % 5 == 2 { 9.0 } else { 0.0 },
            et0_mm: 2.0 + 0.2 * t as f64,
            tmax_degc: 24.0,
            tmin_degc: 12.0,
            rh_pct: 60.0,
        })
        .collect();
    let weather = WeatherStream { id: "wx_r1".into(), region_id: "r1".into(), records };
    let logs = [(
        "p1".to_string(),
        ManagementLog {
            parcel_id: "p1".into(),
            events: vec![ManagementEvent {
                t: 11,
                action: ManagementAction::Irrigate,
                q: Quantity::new(15.0, Unit::Millimeter).unwrap(),
            }],
        },
    )]
    .into_iter()
    .collect();
    let world = WorldState {
        world_id: "hand".into(),
        season: [0, 29],
        parcels: [(parcel.id.clone(), parcel)].into_iter().collect(),
        rasters: BTreeMap::new(),
        grids: [(grid.id.clone(), grid)].into_iter().collect(),
        weather: [("wx_r1".to_string(), weather)].into_iter().collect(),
        logs,
    };
    world.validate().unwrap();
    world
}

#[test]
fn criterion_07_simulator_properties() {
    // Monotonicity and bounds: a 20-point irrigation sweep over 50 parcels.
    let cfg = GenConfig { n_parcels: 50, ..GenConfig::with_seed(42) };
    let world = gen_world(&cfg);
    let crop_parcels: Vec<String> = world
        .parcels
        .values()
        .filter(|p| p.crop_type.is_some())
        .map(|p| p.id.clone())
        .collect();
    assert_eq!(crop_parcels.len(), 50);
    let n = world.season_days();
    let window = [n / 3, 2 * n / 3];
    for parcel in &crop_parcels {
        let mut prev_stress = f64::INFINITY;
        let mut prev_yield = f64::NEG_INFINITY;
        for k in 0..20 {
            let magnitude = 6.0 * k as f64 / 19.0;
            let iv = Intervention::irrigation_delta(magnitude, window);
            let result = sim::run(&world, parcel, Some(&iv)).unwrap();
            assert!(result.stress_index <= prev_stress + 1e-12, "{parcel} k={k}");
            assert!(result.yield_estimate.value >= prev_yield - 1e-9, "{parcel} k={k}");
            prev_stress = result.stress_index;
            prev_yield = result.yield_estimate.value;

            // Bounds and independent step-wise conservation: recompute the
            // fluxes from raw weather records and logged irrigation.
            let capacity = 2.0 * result.per_day[0].soil_water_mm;
            let stream = world.weather_for_region("east").unwrap();
            let stream = if world.parcels[parcel].region_id == "west" {
                world.weather_for_region("west").unwrap()
            } else {
                stream
            };
            let logged: BTreeMap<i64, f64> = world
                .logs
                .get(parcel)
                .map(|log| {
                    let mut m = BTreeMap::new();
                    for e in &log.events {
                        if e.action == ManagementAction::Irrigate {
                            *m.entry(e.t).or_insert(0.0) += e.q.value;
                        }
                    }
                    m
                })
                .unwrap_or_default();
            for d in 0..result.per_day.len() - 1 {
                let day = &result.per_day[d];
                assert!(day.stress >= 0.0 && day.stress <= 1.0);
                assert!(day.soil_water_mm >= 0.0 && day.soil_water_mm <= capacity + 1e-9);
                let record = &stream.records[d];
                let mut irrigation = logged.get(&day.t).copied().unwrap_or(0.0);
                if day.t >= window[0] && day.t <= window[1] {
                    irrigation += magnitude;
                }
                let flux = record.precip_mm + irrigation - day.et_mm;
                let raw_next = day.soil_water_mm + flux;
                if raw_next > 0.0 && raw_next < capacity {
                    let observed = result.per_day[d + 1].soil_water_mm - day.soil_water_mm;
                    assert!(
                        (observed - flux).abs() <= 1e-9,
                        "{parcel} day {d}: conservation broke ({observed} vs {flux})"
                    );
                }
            }
            assert!(result.yield_estimate.value >= 0.0);
            assert!(result.stress_index >= 0.0 && result.stress_index <= 1.0);
        }
    }

    // Hand-traced 30-day recurrence, transcribed independently from the
    // update equations, matched to 1e-12 relative.
    let hand = hand_world();
    let result = sim::run(&hand, "p1", None).unwrap();
    let (capacity, n) = (120.0f64, 30i64);
    let mut store = 60.0f64;
    let mut stress_sum = 0.0;
    for d in 0..n {
        let kc = if d < 10 { 0.4 } else if d < 20 { 1.0 } else { 0.7 };
        let et = kc * (2.0 + 0.2 * d as f64);
        let stress = (1.0 - store / 60.0).max(0.0);
        let got = &result.per_day[d as usize];
        assert!((got.soil_water_mm - store).abs() <= 1e-12 * store.abs().max(1.0));
        assert!((got.et_mm - et).abs() <= 1e-12 * et.max(1.0));
        assert!((got.stress - stress).abs() <= 1e-12);
        stress_sum += stress;
        let precip = if d % 5 == 2 { 9.0 } else { 0.0 };
        let irrigation = if d == 11 { 15.0 } else { 0.0 };
        store = (store + precip + irrigation - et).clamp(0.0, capacity);
    }
    let stress_index = stress_sum / n as f64;
    assert!((result.stress_index - stress_index).abs() <= 1e-12);
    let expected_yield = 10_000.0 * (1.0 - 0.8 * stress_index).max(0.0);
    assert!((result.yield_estimate.value - expected_yield).abs() <= 1e-12 * expected_yield);

    println!(
        "[PASS] 7. simulator properties: 20-point sweep on 50 parcels monotone, \
         conservation and bounds hold, hand recurrence matches to 1e-12"
    );
}

#[test]
fn criterion_08_metric_worked_cases() {
    let v = nrmse(&[3.0, 5.0], &[2.0, 4.0]).unwrap();
    assert!((v - 1.0 / 3.0).abs() <= 1e-12);
    assert_eq!(nrmse(&[2.0, 4.0], &[2.0, 4.0]).unwrap(), 0.0);

    let grid = |cells: Vec<u8>| MaskGrid {
        crs: Crs::metric(0.0),
        origin: [0.0, 0.0],
        pixel_size: [10.0, 10.0],
        width: 3,
        height: 3,
        cells,
    };
    let top_left = grid(vec![0, 0, 0, 1, 1, 0, 1, 1, 0]);
    let bottom_right = grid(vec![0, 1, 1, 0, 1, 1, 0, 0, 0]);
    let worked = iou(&top_left, &bottom_right).unwrap();
    assert!((worked - 1.0 / 7.0).abs() <= 1e-12);
    assert_eq!(iou(&top_left, &top_left.clone()).unwrap(), 1.0);
    let disjoint = grid(vec![0, 0, 0, 0, 0, 0, 0, 0, 1]);
    assert_eq!(iou(&top_left, &disjoint).unwrap(), 0.0);
    assert_eq!(iou(&grid(vec![0; 9]), &grid(vec![0; 9])).unwrap(), 1.0);
    println!("[PASS] 8. metric worked cases: NRMSE 1/3 and IoU 1/7 within 1e-12, edge cases exact");
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_09_provenance_determinism() {
    let cfg = GenConfig { n_parcels: 16, tasks_per_family: 6, ..GenConfig::with_seed(42) };
    let world = gen_world(&cfg);
    let tasks = gen_tasks(&world, &cfg, cfg.seed).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let report_a = run_policy(&world, &tasks, "faulty:mixed", 20, Some(dir_a.path()));
    let report_b = run_policy(&world, &tasks, "faulty:mixed", 20, Some(dir_b.path()));
    assert_eq!(report_a, report_b);
    let tree_a = read_tree(dir_a.path());
    let tree_b = read_tree(dir_b.path());
    assert_eq!(tree_a.len(), tree_b.len());
    assert!(tree_a.keys().any(|k| k.ends_with("trace.json")));
    for (name, bytes) in &tree_a {
        assert_eq!(Some(bytes), tree_b.get(name).as_deref(), "file {name} differs");
    }

    // A single parameter change must alter the corresponding digest.
    let registry = Registry::full();
    let series = json!({"series": [[0, 1.0], [1, 1.0], [2, 1.0], [3, 4.0]], "unit": "dimensionless"});
    let digest = |threshold: f64| {
        let mut args: BTreeMap<String, serde_json::Value> = BTreeMap::new();
        args.insert("series".into(), series.clone());
        args.insert("baseline_window".into(), json!([0, 2]));
        args.insert("threshold".into(), json!(threshold));
        registry
            .invoke(&world, &ToolCall { tool: "rs.anomaly".into(), args })
            .unwrap()
            .1
            .prov
    };
    assert_eq!(digest(2.5), digest(2.5));
    assert_ne!(digest(2.5), digest(2.6));
    println!(
        "[PASS] 9. provenance determinism: {} files byte-identical across runs; \
         parameter change alters the digest",
        tree_a.len()
    );
}

#[test]
fn criterion_10_early_stop() {
    let cfg = GenConfig { n_parcels: 16, tasks_per_family: 6, ..GenConfig::with_seed(42) };
    let world = gen_world(&cfg);
    let tasks = gen_tasks(&world, &cfg, cfg.seed).unwrap();
    let registry = Registry::full();
    let policy = FaultyPolicy::new(FaultSpec::Mixed);
    let mut solved = 0usize;
    for task in &tasks {
        let mut store = ArtifactStore::in_memory();
        let memory = run_episode(
            &registry,
            &world,
            task,
            &policy,
            EpisodeConfig { t_max: 20, oracle_feedback: true },
            &mut store,
        );
        assert!(memory.turns_used() <= 20);
        assert!(memory.turns_used() <= task.budget);
        if let Some(first_pass) = memory
            .turns
            .iter()
            .position(|t| t.report.as_ref().is_some_and(|r| r.pass()))
        {
            assert_eq!(
                first_pass + 1,
                memory.turns.len(),
                "{}: proposals continued after the first passing turn",
                task.task_id
            );
            solved += 1;
        }
    }
    // Scripted control: a clean policy stops at one turn everywhere.
    for task in &tasks {
        let mut store = ArtifactStore::in_memory();
        let memory = run_episode(
            &registry,
            &world,
            task,
            &ScriptedPolicy,
            EpisodeConfig { t_max: 20, oracle_feedback: true },
            &mut store,
        );
        assert_eq!(memory.turns_used(), 1);
    }
    assert!(solved >= tasks.len() - 2, "early-stop check needs solved episodes");
    println!(
        "[PASS] 10. early stop: {solved}/{} episodes halted at their first passing turn",
        tasks.len()
    );
}

/// World immutability across a full benchmark run, kept alongside the
/// acceptance criteria because it guards the same contract: tool use leaves
/// the snapshot untouched.
#[test]
fn world_bundle_unchanged_by_benchmark_run() {
    let cfg = GenConfig { n_parcels: 10, tasks_per_family: 3, ..GenConfig::with_seed(8) };
    let world = gen_world(&cfg);
    let tasks = gen_tasks(&world, &cfg, cfg.seed).unwrap();
    let bundle = tempfile::tempdir().unwrap();
    agroworld::model::save_world(&world, bundle.path()).unwrap();
    let before = read_tree(bundle.path());
    let reloaded = agroworld::model::load_world(bundle.path()).unwrap();
    assert_eq!(reloaded, world);
    let _ = run_policy(&reloaded, &tasks, "faulty:mixed", 20, None);
    let after = read_tree(bundle.path());
    assert_eq!(before, after);
    println!("[PASS] world immutability: bundle bytes unchanged by a full run");
}
