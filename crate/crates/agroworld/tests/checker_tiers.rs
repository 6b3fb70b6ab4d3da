//! Tier-by-tier checker behavior on hand-built tasks, plus totality and
//! tolerance-monotonicity properties.

use agroworld::agent::plan::PlanProgram;
use agroworld::align::{AlignmentPolicy, Extrapolation, Interp};
use agroworld::bench::{gen_tasks, gen_world, GenConfig};
use agroworld::geometry::Crs;
use agroworld::protocol::{
    checker, run_reference, Bindings, CheckerConfig, CounterfactualCheck, FieldKind, FieldSpec,
    NumericCheck, OutputSchema, PhysicalCheck, TaskFamily, TaskInstance, Tier, ViolationCode,
};
use agroworld::sim::DeltaTarget;
use agroworld::toolkit::{Artifact, ArtifactKind, ArtifactMeta, Registry};
use agroworld::units::{Quantity, Unit};
use proptest::prelude::*;
use serde_json::{json, Value};

fn scalar_task(reference: Quantity) -> TaskInstance {
    TaskInstance {
        task_id: "t_scalar".into(),
        q: "test".into(),
        bindings: Bindings {
            world_id: "agw_1".into(),
            season: [0, 119],
            parcel_ids: vec!["p000".into()],
            time_range: None,
            band: None,
            region: None,
            thresholds: Default::default(),
        },
        output_schema: OutputSchema {
            required: vec![
                FieldSpec::new("parcel_id", FieldKind::String),
                FieldSpec::new("value", FieldKind::Number),
                FieldSpec::new("unit", FieldKind::String).with_unit(reference.unit),
            ],
        },
        checker: CheckerConfig {
            numeric: Some(NumericCheck::new("value", reference)),
            counterfactual: None,
            spatial: None,
            physical: PhysicalCheck { tau_min: 0.3, required_units: Default::default() },
        },
        budget: 20,
        family: TaskFamily::Lookup,
        alignment: AlignmentPolicy::new(Crs::metric(44.1), Interp::Linear, Extrapolation::Hold),
        intervention: None,
        reference_plan: PlanProgram::default(),
    }
}

fn grounding_artifact(value: f64, unit: Unit) -> Artifact {
    Artifact {
        kind: ArtifactKind::Scalar,
        payload: json!({"unit": unit, "value": value}),
        meta: ArtifactMeta::unit(unit),
        prov: agroworld::canonical::sha256_hex(format!("{value}").as_bytes()),
    }
}

fn world() -> agroworld::model::WorldState {
    gen_world(&GenConfig { n_parcels: 4, ..GenConfig::with_seed(1) })
}

#[test]
fn missing_required_key_is_schema_error() {
    let world = world();
    let task = scalar_task(Quantity { value: 100.0, unit: Unit::Kilogram });
    let answer = json!({"parcel_id": "p000", "value": 100.0});
    let report = checker::check(&answer, &[grounding_artifact(100.0, Unit::Kilogram)], &task, &world);
    assert_eq!(report.z, 0);
    let v = report
        .violations
        .iter()
        .find(|v| v.code == ViolationCode::SchemaError)
        .expect("schema violation");
    assert_eq!(v.path, "unit");
    assert_eq!(v.tier, Tier::Schema);
}

#[test]
fn numeric_tolerance_band() {
    // y* = 100 kg at 5% relative: 104 passes, 106 fails.
    let world = world();
    let task = scalar_task(Quantity { value: 100.0, unit: Unit::Kilogram });
    for (claim, should_pass) in [(104.0, true), (106.0, false)] {
        let answer = json!({"parcel_id": "p000", "unit": "kg", "value": claim});
        let report = checker::check(&answer, &[grounding_artifact(claim, Unit::Kilogram)], &task, &world);
        let numeric_ok = !report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::ToleranceExceeded);
        assert_eq!(numeric_ok, should_pass, "claim {claim}: {:?}", report.violations);
    }
}

#[test]
fn numeric_tier_converts_units_before_comparing() {
    // 0.1 t == 100 kg: passes despite the schema-tier symbol complaint.
    let world = world();
    let task = scalar_task(Quantity { value: 100.0, unit: Unit::Kilogram });
    let answer = json!({"parcel_id": "p000", "unit": "t", "value": 0.1});
    let report = checker::check(&answer, &[grounding_artifact(0.1, Unit::Tonne)], &task, &world);
    assert!(!report.violations.iter().any(|v| v.code == ViolationCode::ToleranceExceeded));
    // The pinned unit symbol still fails the schema tier.
    assert!(report
        .violations
        .iter()
        .any(|v| v.code == ViolationCode::UnitError && v.tier == Tier::Schema));
}

#[test]
fn wrong_dimension_is_unit_error() {
    let world = world();
    let task = scalar_task(Quantity { value: 100.0, unit: Unit::Kilogram });
    let answer = json!({"parcel_id": "p000", "unit": "mm", "value": 100.0});
    let report = checker::check(&answer, &[grounding_artifact(100.0, Unit::Millimeter)], &task, &world);
    assert!(report
        .violations
        .iter()
        .any(|v| v.code == ViolationCode::UnitError && v.tier == Tier::Numeric));
}

#[test]
fn ungrounded_numeric_value_is_flagged() {
    let world = world();
    let task = scalar_task(Quantity { value: 100.0, unit: Unit::Kilogram });
    // Within tolerance of the reference but absent from every artifact.
    let answer = json!({"parcel_id": "p000", "unit": "kg", "value": 101.0});
    let report = checker::check(&answer, &[grounding_artifact(100.0, Unit::Kilogram)], &task, &world);
    let v = report
        .violations
        .iter()
        .find(|v| v.code == ViolationCode::UngroundedClaim)
        .expect("grounding violation");
    assert_eq!(v.path, "value");
    assert_eq!(v.tier, Tier::Physical);
    assert!(v.cite.is_some());
    // The same value present in an artifact payload passes.
    let grounded = checker::check(
        &answer,
        &[grounding_artifact(101.0, Unit::Kilogram)],
        &task,
        &world,
    );
    assert!(!grounded.violations.iter().any(|v| v.code == ViolationCode::UngroundedClaim));
}

#[test]
fn grounding_accepts_unit_normalized_matches() {
    let world = world();
    let task = scalar_task(Quantity { value: 1.0, unit: Unit::Kilogram });
    // Claim 1 kg, artifact holds 1000 g.
    let answer = json!({"parcel_id": "p000", "unit": "kg", "value": 1.0});
    let report = checker::check(&answer, &[grounding_artifact(1000.0, Unit::Gram)], &task, &world);
    assert!(
        !report.violations.iter().any(|v| v.code == ViolationCode::UngroundedClaim),
        "{:?}",
        report.violations
    );
}

#[test]
fn low_coverage_artifact_fails_physical_tier() {
    let world = world();
    let task = scalar_task(Quantity { value: 100.0, unit: Unit::Kilogram });
    let mut artifact = grounding_artifact(100.0, Unit::Kilogram);
    artifact.meta.validity_ratio = Some(0.1);
    let answer = json!({"parcel_id": "p000", "unit": "kg", "value": 100.0});
    let report = checker::check(&answer, &[artifact], &task, &world);
    assert!(report
        .violations
        .iter()
        .any(|v| v.code == ViolationCode::LowCoverage && v.tier == Tier::Physical));
}

#[test]
fn counterfactual_direction_and_effect_size() {
    let cfg = GenConfig { n_parcels: 12, tasks_per_family: 2, ..GenConfig::with_seed(42) };
    let world = gen_world(&cfg);
    let tasks = gen_tasks(&world, &cfg, cfg.seed).unwrap();
    let registry = Registry::full();
    let task = tasks
        .iter()
        .find(|t| t.family == TaskFamily::Counterfactual)
        .expect("counterfactual task generated");
    let (answer, artifacts) = run_reference(&registry, task, &world).unwrap();

    // The sealed intervention satisfies the configured effect size.
    assert!(checker::check(&answer, &artifacts, task, &world).pass());

    // Demanding an implausibly large effect flips the verdict.
    let mut strict = task.clone();
    strict.checker.counterfactual =
        Some(CounterfactualCheck { delta: 0.9, target: DeltaTarget::StressIndex });
    let report = checker::check(&answer, &artifacts, &strict, &world);
    assert!(report
        .violations
        .iter()
        .any(|v| v.code == ViolationCode::CausalDirectionViolated));

    // The null intervention moves nothing and fails any positive threshold.
    let mut null_answer = answer.clone();
    null_answer["magnitude"] = json!(0.0);
    let mut lax = task.clone();
    lax.checker.counterfactual =
        Some(CounterfactualCheck { delta: 1e-6, target: DeltaTarget::StressIndex });
    let report = checker::check(&null_answer, &artifacts, &lax, &world);
    let causal = report
        .violations
        .iter()
        .find(|v| v.code == ViolationCode::CausalDirectionViolated)
        .expect("null intervention must fail");
    assert_eq!(causal.observed, json!(0.0));
}

#[test]
fn relaxing_tolerance_never_flips_pass_to_fail() {
    let world = world();
    for claim in [95.0, 99.0, 100.0, 103.0, 104.9, 105.0, 112.0] {
        let mut previous_pass = false;
        for rel_tol in [0.01, 0.02, 0.05, 0.1, 0.2, 0.5] {
            let mut task = scalar_task(Quantity { value: 100.0, unit: Unit::Kilogram });
            task.checker.numeric.as_mut().unwrap().rel_tol = rel_tol;
            let answer = json!({"parcel_id": "p000", "unit": "kg", "value": claim});
            let report =
                checker::check(&answer, &[grounding_artifact(claim, Unit::Kilogram)], &task, &world);
            let pass = report.pass();
            assert!(
                pass || !previous_pass,
                "claim {claim}: rel_tol {rel_tol} flipped pass back to fail"
            );
            previous_pass = pass;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Totality: arbitrary JSON answers never panic the checker and always
    /// produce a report (z=0 or z=1, violations consistent with z).
    #[test]
    fn checker_is_total(answer in arb_json(3)) {
        let world = world();
        let task = scalar_task(Quantity { value: 100.0, unit: Unit::Kilogram });
        let report = checker::check(&answer, &[grounding_artifact(100.0, Unit::Kilogram)], &task, &world);
        prop_assert_eq!(report.z == 1, report.violations.is_empty());
    }
}

fn arb_json(depth: u32) -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::from),
        any::<i64>().prop_map(Value::from),
        (-1e12f64..1e12).prop_map(Value::from),
        "[a-z_]{0,12}".prop_map(Value::from),
    ];
    leaf.prop_recursive(depth, 24, 6, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 0..6).prop_map(Value::Array),
            proptest::collection::btree_map("[a-z_]{1,10}", inner, 0..6)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}
